// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "hyperfake/param_store.hpp"
#include "hyperfake/tensor.hpp"

namespace hyperfake::training {

// lr_min + ½(lr0 − lr_min)(1 + cos(π·step/total_steps)).
double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr0, double lr_min);

struct AdamHyper {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::uint64_t t = 0;  // completed updates
  std::map<std::string, Tensor> m, v;

  // Zero moments for every trainable parameter in `params`.
  static AdamState for_params(const ParamStore& params);
};

// One bias-corrected Adam update on a single tensor; `t` is 1-based.
void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::uint64_t t,
                 double lr, const AdamHyper& h);

// Updates every trainable parameter from its accumulated gradient (absent
// gradients count as zero). All gradients are checked before anything is
// written; a non-finite one raises NumericError naming the parameter.
// Parameters and moments are rounded to float32 afterwards.
void adam_step(ParamStore& params, AdamState& state, double lr, const AdamHyper& h);

}  // namespace hyperfake::training
