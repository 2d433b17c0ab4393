// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// Band-level self-attention and the 31 → 3 band reduction.
//
// Dataflow: cube → pooled band descriptors (31×p²) → self-attention over the
// 31 band tokens (31×d) → per-band scores (31×3) → column softmax (BandMixing)
// → each output channel is a convex combination of the bands.

#pragma once

#include <cstddef>
#include <filesystem>
#include <random>
#include <string>

#include <nlohmann/json.hpp>

#include "hyperfake/autograd.hpp"
#include "hyperfake/data/types.hpp"
#include "hyperfake/param_store.hpp"

namespace hyperfake::spectral {

struct SpectralAttentionConfig {
  std::size_t pool_size = 8;  // p
  std::size_t attn_dim = 16;  // d
  std::size_t heads = 1;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static SpectralAttentionConfig from_json(const nlohmann::json& j);
  friend bool operator==(const SpectralAttentionConfig&, const SpectralAttentionConfig&) = default;
};

struct SpectralAttentionParams {
  ag::Var w_q, w_k, w_v;  // p²×d
  ag::Var mixing_head;    // d×3
  std::size_t heads = 1;
  std::size_t pool_size = 8;

  std::size_t attn_dim() const { return w_q.shape().at(1); }
  // ConfigError on inconsistent shapes or d % heads != 0, NumericError on
  // non-finite entries.
  void validate() const;
};

// Registers "<prefix>w_q", ... in `store`.
SpectralAttentionParams make_spectral_params(const SpectralAttentionConfig& config,
                                             ParamStore& store, const std::string& prefix,
                                             std::mt19937_64& rng);

// 31×H×W → 31×p²: each band adaptively average-pooled to p×p.
ag::Var band_descriptors(const ag::Var& cube, std::size_t p);
Tensor band_descriptors(const HSICube& cube, std::size_t p);

struct AttentionOutput {
  ag::Var values;  // 31×d
  Tensor attn;     // heads×31×31, rows sum to 1
};

// softmax((X W_Q)(X W_K)ᵀ / √d)(X W_V) per head on d/heads-wide slices,
// heads concatenated. The temperature uses the full d.
AttentionOutput spectral_attention(const ag::Var& x, const SpectralAttentionParams& params);

// Differentiable alpha: column softmax over the 31 bands of values · mixing_head.
ag::Var mixing_weights(const ag::Var& values, const SpectralAttentionParams& params);

// 31×3, nonnegative, columns sum to 1.
class BandMixing {
 public:
  explicit BandMixing(Tensor alpha);

  static BandMixing uniform();
  // Column c selects band bands[c] (0-based).
  static BandMixing one_hot(std::size_t band_r, std::size_t band_g, std::size_t band_b);

  const Tensor& alpha() const noexcept { return alpha_; }
  double operator()(std::size_t band, std::size_t channel) const { return alpha_.at(band, channel); }

 private:
  Tensor alpha_;
};

BandMixing compute_mixing(const ag::Var& values, const SpectralAttentionParams& params);

// Channel c = Σ_i alpha[i, c] · band_i. Cube 31×H×W, alpha 31×3 → 3×H×W.
ag::Var reduce_bands(const ag::Var& cube, const ag::Var& alpha);
Tensor reduce_bands(const HSICube& cube, const BandMixing& mixing);

// JSON document:
//   {"alpha": 31 rows × 3, "attention_mean": heads × 31 × 31,
//    "top_bands": {"0": [...], "1": [...], "2": [...]}}
// top_bands lists five 1-based band numbers per output channel, heaviest
// first, equal weights ordered by ascending band.
nlohmann::ordered_json band_weights_json(const BandMixing& mixing, const Tensor& attention_mean);
void export_band_weights(const BandMixing& mixing, const Tensor& attention_mean,
                         const std::filesystem::path& path);

}  // namespace hyperfake::spectral
