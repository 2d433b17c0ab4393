// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <random>
#include <string>

#include "hyperfake/autograd.hpp"

namespace hyperfake {

// Ordered name → parameter map. Parameters are leaf Vars, so handles held by
// model code stay valid when values are overwritten in place by load().
class ParamStore {
 public:
  ag::Var add(const std::string& name, Tensor init, bool trainable = true);
  const ag::Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  const std::map<std::string, ag::Var>& items() const { return params_; }
  std::size_t size() const { return params_.size(); }
  std::size_t element_count() const;

  void set_trainable(bool trainable);
  void zero_grad();

  // Copies values out (deep) / in (shape-checked; CheckpointError on any
  // missing, extra or mis-shaped entry).
  std::map<std::string, Tensor> snapshot() const;
  void load(const std::map<std::string, Tensor>& values, const std::string& context);

  bool all_finite() const;

 private:
  std::map<std::string, ag::Var> params_;
};

// Deterministic initializers. Every draw is rounded to float32 so that the
// initial state is exactly representable in checkpoints.
Tensor normal_init(Shape shape, double stddev, std::mt19937_64& rng);
Tensor uniform_init(Shape shape, double bound, std::mt19937_64& rng);

}  // namespace hyperfake
