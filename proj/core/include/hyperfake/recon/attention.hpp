// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// Spectral-wise attention primitives. Tokens are spectral channels, so every
// attention matrix is channel × channel and never spans spatial positions.

#pragma once

#include <cstddef>
#include <vector>

#include "hyperfake/autograd.hpp"

namespace hyperfake::recon {

struct SmsaWeights {
  ag::Var w_q, w_k, w_v, w_o;  // each D×D
};

struct SmsaResult {
  ag::Var output;                  // C×D
  std::vector<ag::Var> attention;  // one C×C row-stochastic matrix per head
};

// Multi-head self-attention over C channel tokens of width D. Each head uses
// a D/heads-wide slice of the projected Q, K, V and scale 1/sqrt(D/heads);
// heads are concatenated and passed through w_o.
SmsaResult smsa(const ag::Var& tokens, const SmsaWeights& weights, std::size_t heads);

struct FlexiWeights {
  std::size_t factor = 4;  // spatial downsample factor s
  ag::Var w_in;            // P×D, P = (H/s)·(W/s)
  ag::Var w_out;           // D×P
  SmsaWeights attn;
};

// Average-pool by s, treat each channel's pooled map as a token, project to
// D, attend, project back, bilinearly upsample by s and add onto the input.
// Accepts C×H×W or 1×C×H×W.
ag::Var flexi_attention(const ag::Var& features, const FlexiWeights& weights, std::size_t heads);

// Pre-norm spectral-wise attention block: attention across channel groups
// (one group per head) followed by a pointwise feed-forward, each residual.
struct SabWeights {
  ag::Var norm1_gamma, norm1_beta;
  ag::Var w_q, w_k, w_v, w_o;  // C×C channel mixes
  ag::Var norm2_gamma, norm2_beta;
  ag::Var ffn_w1, ffn_b1;  // 2C×C×1×1, 2C
  ag::Var ffn_w2, ffn_b2;  // C×2C×1×1, C
};

ag::Var spectral_attention_block(const ag::Var& x, const SabWeights& weights, std::size_t heads);

}  // namespace hyperfake::recon
