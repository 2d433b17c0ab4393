// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/recon/attention.hpp"

#include <cmath>

#include "hyperfake/error.hpp"

namespace hyperfake::recon {

SmsaResult smsa(const ag::Var& tokens, const SmsaWeights& weights, std::size_t heads) {
  if (tokens.shape().size() != 2) throw ShapeError("smsa: tokens must be C×D, got " + to_string(tokens.shape()));
  if (!tokens.value().all_finite()) throw NumericError("smsa: non-finite token values");
  const std::size_t width = tokens.shape()[1];
  if (heads == 0 || width % heads != 0) {
    throw ConfigError("smsa: token width " + std::to_string(width) + " not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const std::size_t head_dim = width / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(head_dim));

  const ag::Var q = ag::matmul(tokens, weights.w_q);
  const ag::Var k = ag::matmul(tokens, weights.w_k);
  const ag::Var v = ag::matmul(tokens, weights.w_v);

  SmsaResult result;
  std::vector<ag::Var> outputs;
  for (std::size_t h = 0; h < heads; ++h) {
    const ag::Var qh = ag::narrow(q, 1, h * head_dim, head_dim);
    const ag::Var kh = ag::narrow(k, 1, h * head_dim, head_dim);
    const ag::Var vh = ag::narrow(v, 1, h * head_dim, head_dim);
    ag::Var attn = ag::softmax_last(ag::scale(ag::matmul(qh, ag::transpose(kh)), scale));
    outputs.push_back(ag::matmul(attn, vh));
    result.attention.push_back(std::move(attn));
  }
  const ag::Var merged = heads == 1 ? outputs.front() : ag::concat(outputs, 1);
  result.output = ag::matmul(merged, weights.w_o);
  return result;
}

ag::Var flexi_attention(const ag::Var& features, const FlexiWeights& weights, std::size_t heads) {
  const Shape& in = features.shape();
  if (in.size() != 3 && !(in.size() == 4 && in[0] == 1)) {
    throw ShapeError("flexi_attention: expected C×H×W, got " + to_string(in));
  }
  const std::size_t r = in.size();
  const std::size_t c = in[r - 3], h = in[r - 2], w = in[r - 1];
  const std::size_t s = weights.factor;
  if (s == 0 || h % s != 0 || w % s != 0) {
    throw ShapeError("flexi_attention: downsample factor " + std::to_string(s) +
                     " does not divide " + std::to_string(h) + "×" + std::to_string(w));
  }
  const std::size_t hs = h / s, ws = w / s;
  if (weights.w_in.shape()[0] != hs * ws) {
    throw ShapeError("flexi_attention: projection sized for " +
                     std::to_string(weights.w_in.shape()[0]) + " pooled positions, input gives " +
                     std::to_string(hs * ws));
  }
  const ag::Var pooled =
      ag::spatial_map(features, ag::avg_pool_matrix(h, s), ag::avg_pool_matrix(w, s));
  const ag::Var tokens = ag::matmul(ag::reshape(pooled, {c, hs * ws}), weights.w_in);
  const ag::Var attended = smsa(tokens, weights.attn, heads).output;
  Shape small = in;
  small[r - 2] = hs;
  small[r - 1] = ws;
  const ag::Var back = ag::reshape(ag::matmul(attended, weights.w_out), small);
  const ag::Var up = ag::spatial_map(back, ag::bilinear_matrix(hs, h), ag::bilinear_matrix(ws, w));
  return ag::add(features, up);
}

ag::Var spectral_attention_block(const ag::Var& x, const SabWeights& wts, std::size_t heads) {
  const Shape& in = x.shape();
  if (in.size() != 4 || in[0] != 1) throw ShapeError("SAB: expected 1×C×H×W, got " + to_string(in));
  const std::size_t c = in[1], pixels = in[2] * in[3];
  if (heads == 0 || c % heads != 0) {
    throw ConfigError("SAB: " + std::to_string(c) + " channels not divisible by " +
                      std::to_string(heads) + " heads");
  }
  const std::size_t group = c / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(pixels));

  const ag::Var normed = ag::layer_norm_channels(x, wts.norm1_gamma, wts.norm1_beta);
  const ag::Var tokens = ag::reshape(normed, {c, pixels});
  const ag::Var q = ag::matmul(wts.w_q, tokens);
  const ag::Var k = ag::matmul(wts.w_k, tokens);
  const ag::Var v = ag::matmul(wts.w_v, tokens);
  std::vector<ag::Var> outputs;
  for (std::size_t h = 0; h < heads; ++h) {
    const ag::Var qh = ag::narrow(q, 0, h * group, group);
    const ag::Var kh = ag::narrow(k, 0, h * group, group);
    const ag::Var vh = ag::narrow(v, 0, h * group, group);
    const ag::Var attn = ag::softmax_last(ag::scale(ag::matmul(qh, ag::transpose(kh)), scale));
    outputs.push_back(ag::matmul(attn, vh));
  }
  const ag::Var merged = heads == 1 ? outputs.front() : ag::concat(outputs, 0);
  const ag::Var attended = ag::reshape(ag::matmul(wts.w_o, merged), in);
  const ag::Var x1 = ag::add(x, attended);

  ag::Var f = ag::layer_norm_channels(x1, wts.norm2_gamma, wts.norm2_beta);
  f = ag::gelu(ag::add_channel_bias(ag::conv2d(f, wts.ffn_w1, 1, 0), wts.ffn_b1));
  f = ag::add_channel_bias(ag::conv2d(f, wts.ffn_w2, 1, 0), wts.ffn_b2);
  return ag::add(x1, f);
}

}  // namespace hyperfake::recon
