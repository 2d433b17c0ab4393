// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "hyperfake/tensor.hpp"

namespace hyperfake {

inline constexpr std::size_t kSpectralBands = 31;

struct Resolution {
  std::size_t height = 64;
  std::size_t width = 64;
  friend bool operator==(const Resolution&, const Resolution&) = default;
};

// 3×H×W image with values in [0, 1], channel order R, G, B.
class RGBFrame {
 public:
  RGBFrame(std::size_t height, std::size_t width, std::vector<float> pixels);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::span<const float> pixels() const noexcept { return pixels_; }

  float at(std::size_t c, std::size_t y, std::size_t x) const {
    return pixels_[(c * height_ + y) * width_ + x];
  }

  Tensor to_tensor() const;
  static RGBFrame from_tensor(const Tensor& t);

 private:
  std::size_t height_, width_;
  std::vector<float> pixels_;
};

// 31×H×W reconstructed spectral cube, float32 storage (the HSC1 precision).
class HSICube {
 public:
  HSICube(std::size_t height, std::size_t width, std::vector<float> bands);

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::span<const float> values() const noexcept { return bands_; }
  std::span<const float> band(std::size_t i) const {
    return std::span<const float>(bands_).subspan(i * height_ * width_, height_ * width_);
  }

  Tensor to_tensor() const;
  // Rounds to float32 and validates.
  static HSICube from_tensor(const Tensor& t);

  friend bool operator==(const HSICube&, const HSICube&) = default;

 private:
  std::size_t height_, width_;
  std::vector<float> bands_;
};

}  // namespace hyperfake
