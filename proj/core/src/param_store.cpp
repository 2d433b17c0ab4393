// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/param_store.hpp"

#include "hyperfake/error.hpp"

namespace hyperfake {

ag::Var ParamStore::add(const std::string& name, Tensor init, bool trainable) {
  if (params_.count(name)) throw ConfigError("duplicate parameter " + name);
  ag::Var v(std::move(init), trainable);
  params_.emplace(name, v);
  return v;
}

const ag::Var& ParamStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw ConfigError("unknown parameter " + name);
  return it->second;
}

std::size_t ParamStore::element_count() const {
  std::size_t n = 0;
  for (const auto& [_, v] : params_) n += v.value().size();
  return n;
}

void ParamStore::set_trainable(bool trainable) {
  for (auto& [_, v] : params_) {
    ag::Var handle = v;
    handle.set_requires_grad(trainable);
  }
}

void ParamStore::zero_grad() {
  for (auto& [_, v] : params_) {
    ag::Var handle = v;
    handle.zero_grad();
  }
}

std::map<std::string, Tensor> ParamStore::snapshot() const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, v] : params_) out.emplace(name, v.value());
  return out;
}

void ParamStore::load(const std::map<std::string, Tensor>& values, const std::string& context) {
  for (const auto& [name, t] : values) {
    auto it = params_.find(name);
    if (it == params_.end()) throw CheckpointError(context + ": unexpected parameter " + name);
    if (it->second.shape() != t.shape()) {
      throw CheckpointError(context + ": parameter " + name + " has shape " +
                            to_string(t.shape()) + ", model expects " +
                            to_string(it->second.shape()));
    }
  }
  for (const auto& [name, _] : params_) {
    if (!values.count(name)) throw CheckpointError(context + ": missing parameter " + name);
  }
  for (auto& [name, v] : params_) {
    ag::Var handle = v;
    handle.mutable_value() = values.at(name);
  }
}

bool ParamStore::all_finite() const {
  for (const auto& [_, v] : params_) {
    if (!v.value().all_finite()) return false;
  }
  return true;
}

Tensor normal_init(Shape shape, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  round_to_float(t);
  return t;
}

Tensor uniform_init(Shape shape, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Tensor t(std::move(shape));
  for (double& v : t.data()) v = dist(rng);
  round_to_float(t);
  return t;
}

}  // namespace hyperfake
