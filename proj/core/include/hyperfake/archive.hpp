// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// Named float32 array container shared by reconstruction weights and
// pipeline checkpoints. Layout (all integers little-endian):
//
//   bytes 0-3   magic "HFAR"
//   uint32      format version (1)
//   uint64      header length L
//   L bytes     UTF-8 JSON header
//   uint32      array count
//   per array:  uint32 name length, name bytes, uint32 rank,
//               uint32 dims[rank], float32 values (row-major)

#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "hyperfake/tensor.hpp"

namespace hyperfake {

struct Archive {
  static constexpr std::uint32_t kVersion = 1;

  nlohmann::ordered_json header = nlohmann::ordered_json::object();
  // Values are stored as float32; callers hand in float-representable tensors
  // when they need bit-exact round trips.
  std::map<std::string, Tensor> arrays;

  // SHA-256 over the canonical serialization of `arrays` only (names,
  // shapes, float32 payloads). Independent of the header.
  std::string arrays_hash() const;
};

void write_archive(const Archive& archive, const std::filesystem::path& path);
Archive read_archive(const std::filesystem::path& path);

}  // namespace hyperfake
