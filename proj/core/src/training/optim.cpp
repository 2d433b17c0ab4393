// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/training/optim.hpp"

#include <cmath>
#include <numbers>

#include "hyperfake/error.hpp"

namespace hyperfake::training {

double cosine_lr(std::uint64_t step, std::uint64_t total_steps, double lr0, double lr_min) {
  if (total_steps < 1) throw DomainError("cosine_lr: total_steps must be ≥ 1");
  if (step > total_steps) {
    throw DomainError("cosine_lr: step " + std::to_string(step) + " beyond total " +
                      std::to_string(total_steps));
  }
  if (step == 0) return lr0;
  if (step == total_steps) return lr_min;
  const double phase = std::numbers::pi * static_cast<double>(step) / static_cast<double>(total_steps);
  return lr_min + 0.5 * (lr0 - lr_min) * (1.0 + std::cos(phase));
}

AdamState AdamState::for_params(const ParamStore& params) {
  AdamState s;
  for (const auto& [name, p] : params.items()) {
    if (!p.requires_grad()) continue;
    s.m.emplace(name, Tensor(p.shape()));
    s.v.emplace(name, Tensor(p.shape()));
  }
  return s;
}

void adam_update(Tensor& param, const Tensor& grad, Tensor& m, Tensor& v, std::uint64_t t,
                 double lr, const AdamHyper& h) {
  const double c1 = 1.0 - std::pow(h.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(h.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    m[i] = h.beta1 * m[i] + (1.0 - h.beta1) * g;
    v[i] = h.beta2 * v[i] + (1.0 - h.beta2) * g * g;
    param[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + h.eps);
  }
}

void adam_step(ParamStore& params, AdamState& state, double lr, const AdamHyper& h) {
  if (!(lr > 0.0)) throw DomainError("adam_step: learning rate must be positive");
  for (const auto& [name, p] : params.items()) {
    if (!p.requires_grad()) continue;
    if (!state.m.count(name)) throw ContractError("adam_step: no optimizer state for " + name);
    if (p.has_grad() && !p.grad().all_finite()) {
      throw NumericError("adam_step: non-finite gradient for parameter " + name);
    }
  }
  ++state.t;
  for (const auto& [name, p] : params.items()) {
    if (!p.requires_grad()) continue;
    Tensor& m = state.m.at(name);
    Tensor& v = state.v.at(name);
    const Tensor grad = p.has_grad() ? p.grad() : Tensor(p.shape());
    ag::Var handle = p;
    adam_update(handle.mutable_value(), grad, m, v, state.t, lr, h);
    round_to_float(handle.mutable_value());
    round_to_float(m);
    round_to_float(v);
  }
}

}  // namespace hyperfake::training
