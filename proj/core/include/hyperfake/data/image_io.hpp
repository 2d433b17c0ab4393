// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "hyperfake/data/manifest.hpp"
#include "hyperfake/data/types.hpp"

namespace hyperfake {

// Interleaved samples exactly as stored (8- or 16-bit), palette expanded.
struct DecodedImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  int bit_depth = 8;
  std::vector<std::uint16_t> samples;

  double max_value() const { return bit_depth == 16 ? 65535.0 : 255.0; }
};

// PNG or JPEG, detected from the leading bytes. IoError when undecodable.
DecodedImage decode_image(const std::filesystem::path& path);

void write_png(const std::filesystem::path& path, std::size_t height, std::size_t width,
               std::size_t channels, int bit_depth, std::span<const std::uint16_t> samples);
void write_png_rgb8(const std::filesystem::path& path, std::size_t height, std::size_t width,
                    std::span<const std::uint8_t> interleaved);
void write_png_gray8(const std::filesystem::path& path, std::size_t height, std::size_t width,
                     std::span<const std::uint8_t> pixels);

// Centre-crops to a square, resizes bilinearly to `resolution` and scales to
// [0, 1]. ChannelError for gray or gray+alpha images; alpha is dropped.
RGBFrame to_frame(const DecodedImage& image, Resolution resolution);

RGBFrame load_frame(const std::filesystem::path& path, Resolution resolution);
RGBFrame load_frame(const DatasetManifest& manifest, const SampleRecord& record);

}  // namespace hyperfake
