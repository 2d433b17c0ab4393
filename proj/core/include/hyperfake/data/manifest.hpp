// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// JSON-Lines dataset manifest. One record per line with exactly the fields
// frame_path, label, split, video_id, frame_index. Relative frame paths are
// resolved against the manifest's directory.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hyperfake/data/types.hpp"

namespace hyperfake {

enum class Split { kTrain, kVal, kTest };

std::string_view to_string(Split split);
std::optional<Split> parse_split(std::string_view text);

struct SampleRecord {
  std::string frame_path;
  int label = 0;  // 0 = real, 1 = fake
  Split split = Split::kTrain;
  std::string video_id;
  std::uint64_t frame_index = 0;

  friend bool operator==(const SampleRecord&, const SampleRecord&) = default;
};

struct DatasetManifest {
  std::vector<SampleRecord> records;
  std::uint64_t seed = 0;
  Resolution resolution;
  std::filesystem::path base_dir;

  std::vector<SampleRecord> select(Split split) const;
  std::map<Split, std::size_t> split_counts() const;
  std::filesystem::path resolve(const SampleRecord& record) const;
  // Throws ValidationError unless `split` holds both labels.
  void require_both_labels(Split split) const;
};

// Throws LeakageError if any video_id appears in more than one split.
void check_no_leakage(const std::vector<SampleRecord>& records);

DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir);

std::string format_manifest(const std::vector<SampleRecord>& records);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// Assigns splits by video: every frame of a video shares its split, the
// assignment is a pure function of (records, fractions, seed) and each
// label is split independently so both splits keep the global label ratio
// to within one video.
std::vector<SampleRecord> split_dataset(std::vector<SampleRecord> records,
                                        std::pair<double, double> fractions,
                                        std::uint64_t seed);

}  // namespace hyperfake
