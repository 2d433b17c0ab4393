// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// Seeded random inputs for property tests.

#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "hyperfake/data/types.hpp"
#include "hyperfake/eval/metrics.hpp"
#include "hyperfake/tensor.hpp"

namespace hyperfake::testing {

inline Tensor random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = u(rng);
  return t;
}

inline HSICube random_cube(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(kSpectralBands * h * w);
  for (float& x : v) x = u(rng);
  return HSICube(h, w, std::move(v));
}

inline RGBFrame random_frame(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> v(3 * h * w);
  for (float& x : v) x = u(rng);
  return RGBFrame(h, w, std::move(v));
}

// Random column-stochastic 31×3 matrix.
inline Tensor random_alpha(std::mt19937_64& rng) {
  Tensor a = random_tensor({kSpectralBands, 3}, rng, 0.0, 1.0);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0.0;
    for (std::size_t b = 0; b < kSpectralBands; ++b) s += a.at(b, c);
    for (std::size_t b = 0; b < kSpectralBands; ++b) a.at(b, c) /= s;
  }
  return a;
}

// Size in [min_n, max_n], both classes present. Half of the sets draw
// scores from a coarse grid so that ties are common.
inline eval::ScoreSet random_score_set(std::mt19937_64& rng, std::size_t min_n = 2, std::size_t max_n = 200) {
  std::uniform_int_distribution<std::size_t> size(min_n, max_n);
  std::bernoulli_distribution coin(0.5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const std::size_t n = size(rng);
  const bool coarse = coin(rng);
  const int levels = std::uniform_int_distribution<int>(2, 12)(rng);
  const double p_pos = std::uniform_real_distribution<double>(0.1, 0.9)(rng);
  const double shift = std::uniform_real_distribution<double>(-0.3, 0.5)(rng);
  eval::ScoreSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = u(rng) < p_pos ? 1 : 0;
    double x = std::clamp(u(rng) + (y ? shift : 0.0), 0.0, 1.0);
    if (coarse) x = std::round(x * levels) / levels;
    s.scores.push_back(x);
    s.labels.push_back(y);
  }
  s.labels[0] = 1;
  s.labels[1] = 0;
  return s;
}

}  // namespace hyperfake::testing
