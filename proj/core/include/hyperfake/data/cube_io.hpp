// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// HSC1 cube files: little-endian; bytes 0-3 "HSC1"; uint32 C, H, W; then
// C·H·W float32 values, band-major then row-major. Pipeline cubes have C = 31.

#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "hyperfake/data/types.hpp"

namespace hyperfake {

std::string encode_cube(const HSICube& cube);
HSICube decode_cube(std::string_view bytes, const std::string& origin = "cube");

void write_cube(const HSICube& cube, const std::filesystem::path& path);
HSICube read_cube(const std::filesystem::path& path);

}  // namespace hyperfake
