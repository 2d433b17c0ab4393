// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/data/types.hpp"

#include <cmath>

#include "hyperfake/error.hpp"

namespace hyperfake {

RGBFrame::RGBFrame(std::size_t height, std::size_t width, std::vector<float> pixels)
    : height_(height), width_(width), pixels_(std::move(pixels)) {
  if (pixels_.size() != 3 * height_ * width_) {
    throw ShapeError("RGB frame needs 3×" + std::to_string(height_) + "×" +
                     std::to_string(width_) + " values, got " + std::to_string(pixels_.size()));
  }
  for (float v : pixels_) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw ValidationError("RGB frame value " + std::to_string(v) + " outside [0, 1]");
    }
  }
}

Tensor RGBFrame::to_tensor() const {
  return from_floats({3, height_, width_}, pixels_);
}

RGBFrame RGBFrame::from_tensor(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != 3) throw ShapeError("RGB frame must be 3×H×W, got " + to_string(t.shape()));
  return RGBFrame(t.dim(1), t.dim(2), to_floats(t));
}

HSICube::HSICube(std::size_t height, std::size_t width, std::vector<float> bands)
    : height_(height), width_(width), bands_(std::move(bands)) {
  if (bands_.size() != kSpectralBands * height_ * width_) {
    throw ShapeError("spectral cube needs 31×" + std::to_string(height_) + "×" +
                     std::to_string(width_) + " values, got " + std::to_string(bands_.size()));
  }
  for (float v : bands_) {
    if (!std::isfinite(v)) throw NumericError("spectral cube holds a non-finite value");
  }
}

Tensor HSICube::to_tensor() const {
  return from_floats({kSpectralBands, height_, width_}, bands_);
}

HSICube HSICube::from_tensor(const Tensor& t) {
  if (t.rank() != 3 || t.dim(0) != kSpectralBands) {
    throw ShapeError("spectral cube must be 31×H×W, got " + to_string(t.shape()));
  }
  return HSICube(t.dim(1), t.dim(2), to_floats(t));
}

}  // namespace hyperfake
