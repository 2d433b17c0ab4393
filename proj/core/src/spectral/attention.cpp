// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/spectral/attention.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "../binary_io.hpp"
#include "hyperfake/error.hpp"

namespace hyperfake::spectral {

void SpectralAttentionConfig::validate() const {
  if (pool_size < 1) throw ConfigError("spectral attention: pool_size must be ≥ 1");
  if (attn_dim < 1 || heads < 1 || attn_dim % heads != 0) {
    throw ConfigError("spectral attention: attn_dim " + std::to_string(attn_dim) +
                      " not divisible by heads " + std::to_string(heads));
  }
}

nlohmann::ordered_json SpectralAttentionConfig::to_json() const {
  return {{"pool_size", pool_size}, {"attn_dim", attn_dim}, {"heads", heads}};
}

SpectralAttentionConfig SpectralAttentionConfig::from_json(const nlohmann::json& j) {
  SpectralAttentionConfig c;
  c.pool_size = j.at("pool_size").get<std::size_t>();
  c.attn_dim = j.at("attn_dim").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  return c;
}

void SpectralAttentionParams::validate() const {
  const std::size_t tokens = pool_size * pool_size;
  const Shape& q = w_q.shape();
  if (q.size() != 2 || q[0] != tokens || w_k.shape() != q || w_v.shape() != q) {
    throw ConfigError("spectral attention: W_Q/W_K/W_V must all be " + std::to_string(tokens) +
                      "×d");
  }
  const std::size_t d = q[1];
  if (heads < 1 || d % heads != 0) {
    throw ConfigError("spectral attention: d=" + std::to_string(d) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  if (mixing_head.shape() != Shape{d, 3}) throw ConfigError("spectral attention: mixing head must be d×3");
  for (const ag::Var* v : {&w_q, &w_k, &w_v, &mixing_head}) {
    if (!v->value().all_finite()) throw NumericError("spectral attention: non-finite parameter");
  }
}

SpectralAttentionParams make_spectral_params(const SpectralAttentionConfig& config,
                                             ParamStore& store, const std::string& prefix,
                                             std::mt19937_64& rng) {
  config.validate();
  const std::size_t tokens = config.pool_size * config.pool_size;
  const std::size_t d = config.attn_dim;
  const double sd_in = 1.0 / std::sqrt(static_cast<double>(tokens));
  SpectralAttentionParams p;
  p.heads = config.heads;
  p.pool_size = config.pool_size;
  p.w_q = store.add(prefix + "w_q", normal_init({tokens, d}, sd_in, rng));
  p.w_k = store.add(prefix + "w_k", normal_init({tokens, d}, sd_in, rng));
  p.w_v = store.add(prefix + "w_v", normal_init({tokens, d}, sd_in, rng));
  p.mixing_head = store.add(prefix + "mixing_head",
                            normal_init({d, 3}, 1.0 / std::sqrt(static_cast<double>(d)), rng));
  return p;
}

ag::Var band_descriptors(const ag::Var& cube, std::size_t p) {
  const Shape& s = cube.shape();
  if (s.size() != 3 || s[0] != kSpectralBands) {
    throw ShapeError("band_descriptors: expected 31×H×W, got " + to_string(s));
  }
  if (p == 0 || p > std::min(s[1], s[2])) {
    throw ShapeError("band_descriptors: pool size " + std::to_string(p) +
                     " exceeds spatial size " + std::to_string(s[1]) + "×" + std::to_string(s[2]));
  }
  const ag::Var pooled =
      ag::spatial_map(cube, ag::adaptive_pool_matrix(s[1], p), ag::adaptive_pool_matrix(s[2], p));
  return ag::reshape(pooled, {kSpectralBands, p * p});
}

Tensor band_descriptors(const HSICube& cube, std::size_t p) {
  return band_descriptors(ag::Var(cube.to_tensor()), p).value();
}

AttentionOutput spectral_attention(const ag::Var& x, const SpectralAttentionParams& params) {
  params.validate();
  const std::size_t tokens = params.pool_size * params.pool_size;
  if (x.shape() != Shape{kSpectralBands, tokens}) {
    throw ShapeError("spectral_attention: expected 31×" + std::to_string(tokens) + ", got " +
                     to_string(x.shape()));
  }
  if (!x.value().all_finite()) throw NumericError("spectral_attention: non-finite descriptors");

  const std::size_t d = params.attn_dim();
  const std::size_t dh = d / params.heads;
  const double temperature = 1.0 / std::sqrt(static_cast<double>(d));
  const ag::Var q = ag::matmul(x, params.w_q);
  const ag::Var k = ag::matmul(x, params.w_k);
  const ag::Var v = ag::matmul(x, params.w_v);

  AttentionOutput out;
  out.attn = Tensor({params.heads, kSpectralBands, kSpectralBands});
  std::vector<ag::Var> per_head;
  for (std::size_t h = 0; h < params.heads; ++h) {
    const ag::Var qh = params.heads == 1 ? q : ag::narrow(q, 1, h * dh, dh);
    const ag::Var kh = params.heads == 1 ? k : ag::narrow(k, 1, h * dh, dh);
    const ag::Var vh = params.heads == 1 ? v : ag::narrow(v, 1, h * dh, dh);
    const ag::Var a = ag::softmax_last(ag::scale(ag::matmul(qh, ag::transpose(kh)), temperature));
    std::copy(a.value().values().begin(), a.value().values().end(),
              out.attn.data().begin() + h * kSpectralBands * kSpectralBands);
    per_head.push_back(ag::matmul(a, vh));
  }
  out.values = params.heads == 1 ? per_head[0] : ag::concat(per_head, 1);
  if (!out.values.value().all_finite()) throw NumericError("spectral_attention: non-finite output");
  return out;
}

ag::Var mixing_weights(const ag::Var& values, const SpectralAttentionParams& params) {
  const std::size_t d = params.attn_dim();
  if (values.shape() != Shape{kSpectralBands, d}) {
    throw ShapeError("compute_mixing: expected 31×" + std::to_string(d) + " values, got " +
                     to_string(values.shape()));
  }
  const ag::Var scores = ag::matmul(values, params.mixing_head);
  if (!scores.value().all_finite()) throw NumericError("compute_mixing: non-finite band scores");
  return ag::transpose(ag::softmax_last(ag::transpose(scores)));
}

BandMixing::BandMixing(Tensor alpha) : alpha_(std::move(alpha)) {
  if (alpha_.shape() != Shape{kSpectralBands, 3}) {
    throw ShapeError("BandMixing: alpha must be 31×3, got " + to_string(alpha_.shape()));
  }
  if (!alpha_.all_finite()) throw NumericError("BandMixing: non-finite weight");
  for (std::size_t c = 0; c < 3; ++c) {
    double total = 0.0;
    for (std::size_t b = 0; b < kSpectralBands; ++b) {
      if (alpha_.at(b, c) < 0.0) throw ValidationError("BandMixing: negative weight");
      total += alpha_.at(b, c);
    }
    if (std::abs(total - 1.0) > 1e-6) {
      throw ValidationError("BandMixing: column " + std::to_string(c) + " sums to " +
                            std::to_string(total));
    }
  }
}

BandMixing BandMixing::uniform() {
  return BandMixing(Tensor({kSpectralBands, 3}, 1.0 / static_cast<double>(kSpectralBands)));
}

BandMixing BandMixing::one_hot(std::size_t band_r, std::size_t band_g, std::size_t band_b) {
  Tensor a({kSpectralBands, 3});
  const std::size_t bands[3] = {band_r, band_g, band_b};
  for (std::size_t c = 0; c < 3; ++c) {
    if (bands[c] >= kSpectralBands) throw ShapeError("BandMixing: band index out of range");
    a.at(bands[c], c) = 1.0;
  }
  return BandMixing(std::move(a));
}

BandMixing compute_mixing(const ag::Var& values, const SpectralAttentionParams& params) {
  return BandMixing(mixing_weights(values, params).value());
}

ag::Var reduce_bands(const ag::Var& cube, const ag::Var& alpha) {
  const Shape& s = cube.shape();
  if (s.size() != 3 || s[0] != kSpectralBands) {
    throw ShapeError("reduce_bands: expected 31×H×W cube, got " + to_string(s));
  }
  if (alpha.shape() != Shape{kSpectralBands, 3}) {
    throw ShapeError("reduce_bands: expected 31×3 mixing, got " + to_string(alpha.shape()));
  }
  const ag::Var flat = ag::reshape(cube, {kSpectralBands, s[1] * s[2]});
  return ag::reshape(ag::matmul(ag::transpose(alpha), flat), {3, s[1], s[2]});
}

Tensor reduce_bands(const HSICube& cube, const BandMixing& mixing) {
  return reduce_bands(ag::Var(cube.to_tensor()), ag::Var(mixing.alpha())).value();
}

nlohmann::ordered_json band_weights_json(const BandMixing& mixing, const Tensor& attention_mean) {
  const Shape& as = attention_mean.shape();
  if (as.size() != 3 || as[1] != kSpectralBands || as[2] != kSpectralBands) {
    throw ShapeError("export_band_weights: attention must be heads×31×31, got " + to_string(as));
  }
  nlohmann::ordered_json doc;
  nlohmann::ordered_json alpha = nlohmann::ordered_json::array();
  for (std::size_t b = 0; b < kSpectralBands; ++b) {
    alpha.push_back({mixing(b, 0), mixing(b, 1), mixing(b, 2)});
  }
  doc["alpha"] = std::move(alpha);

  nlohmann::ordered_json heads = nlohmann::ordered_json::array();
  for (std::size_t h = 0; h < as[0]; ++h) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < kSpectralBands; ++i) {
      nlohmann::ordered_json row = nlohmann::ordered_json::array();
      for (std::size_t j = 0; j < kSpectralBands; ++j) {
        row.push_back(attention_mean[(h * kSpectralBands + i) * kSpectralBands + j]);
      }
      rows.push_back(std::move(row));
    }
    heads.push_back(std::move(rows));
  }
  doc["attention_mean"] = std::move(heads);

  nlohmann::ordered_json top = nlohmann::ordered_json::object();
  for (std::size_t c = 0; c < 3; ++c) {
    std::vector<std::size_t> order(kSpectralBands);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return mixing(a, c) > mixing(b, c); });
    nlohmann::ordered_json bands = nlohmann::ordered_json::array();
    for (std::size_t i = 0; i < 5; ++i) bands.push_back(order[i] + 1);
    top[std::to_string(c)] = std::move(bands);
  }
  doc["top_bands"] = std::move(top);
  return doc;
}

void export_band_weights(const BandMixing& mixing, const Tensor& attention_mean,
                         const std::filesystem::path& path) {
  detail::write_file_atomic(path.string(), band_weights_json(mixing, attention_mean).dump(2) + "\n");
}

}  // namespace hyperfake::spectral
