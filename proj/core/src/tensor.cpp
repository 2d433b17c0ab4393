// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/tensor.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <sstream>

#include "hyperfake/error.hpp"

namespace hyperfake {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kSchema: return "schema error";
    case ErrorKind::kValidation: return "validation error";
    case ErrorKind::kLeakage: return "leakage error";
    case ErrorKind::kStratification: return "stratification error";
    case ErrorKind::kIo: return "I/O error";
    case ErrorKind::kChannel: return "channel error";
    case ErrorKind::kFormat: return "format error";
    case ErrorKind::kConfig: return "config error";
    case ErrorKind::kShape: return "shape error";
    case ErrorKind::kNumeric: return "numeric error";
    case ErrorKind::kCheckpoint: return "checkpoint error";
    case ErrorKind::kDomain: return "domain error";
    case ErrorKind::kMetric: return "metric error";
    case ErrorKind::kContract: return "contract error";
    case ErrorKind::kIntegrity: return "integrity error";
  }
  return "error";
}

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << "x";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(numel(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (data_.size() != numel(shape_)) {
    throw ShapeError("tensor data has " + std::to_string(data_.size()) +
                     " elements but shape " + to_string(shape_) + " needs " +
                     std::to_string(numel(shape_)));
  }
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

Tensor Tensor::reshaped(Shape shape) const {
  if (numel(shape) != data_.size()) {
    throw ShapeError("cannot reshape " + to_string(shape_) + " to " +
                     to_string(shape));
  }
  return Tensor(std::move(shape), data_);
}

bool Tensor::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

double Tensor::max_abs() const {
  double m = 0.0;
  for (double v : data_) m = std::max(m, std::abs(v));
  return m;
}

void round_to_float(Tensor& tensor) {
  for (double& v : tensor.data()) v = static_cast<double>(static_cast<float>(v));
}

Tensor from_floats(Shape shape, std::span<const float> values) {
  std::vector<double> data(values.begin(), values.end());
  return Tensor(std::move(shape), std::move(data));
}

std::vector<float> to_floats(const Tensor& tensor) {
  std::vector<float> out(tensor.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(tensor[i]);
  return out;
}

bool bit_equal(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) {
      return false;
    }
  }
  return true;
}

}  // namespace hyperfake
