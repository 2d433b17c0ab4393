// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// Real/fake head over the 3-channel reduced representation:
//
//   recalibrate(3) → stem → recalibrate(stem width) → stages → GAP → linear → logit
//
// Positive logits mean "fake" (label 1).

#pragma once

#include <cstddef>
#include <map>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperfake/autograd.hpp"
#include "hyperfake/data/types.hpp"
#include "hyperfake/param_store.hpp"

namespace hyperfake::classifier {

enum class Backbone { kCompact, kEffnetB0Shape };

const char* to_string(Backbone b);
Backbone parse_backbone(const std::string& name);

struct ClassifierConfig {
  Backbone backbone = Backbone::kCompact;
  std::size_t recalib_reduction = 4;
  Resolution input_resolution;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ClassifierConfig from_json(const nlohmann::json& j);
  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

// Width of the first convolution, which the second recalibration gates.
std::size_t stem_width(Backbone b);

struct Logit {
  explicit Logit(double v);
  double value;
};

struct Prediction {
  double probability;
  int label;
};

// probability = sigmoid(logit); label = 1 iff probability ≥ threshold.
Prediction predict(Logit logit, double threshold = 0.5);

// Mean of max(z,0) − z·y + log1p(exp(−|z|)).
double bce_with_logits(std::span<const double> logits, std::span<const int> labels);

// Squeeze-excitation gate: g = sigmoid(W2 · relu(W1 · channel_means + b1) + b2).
struct RecalibParams {
  ag::Var w1, b1;  // hidden×C, hidden
  ag::Var w2, b2;  // C×hidden, C
};

RecalibParams make_recalib(std::size_t channels, std::size_t reduction, ParamStore& store,
                           const std::string& prefix, std::mt19937_64& rng);

// Accepts C×H×W or N×C×H×W. `gates`, when given, receives the N×C gates.
ag::Var recalibrate(const ag::Var& features, const RecalibParams& params, Tensor* gates = nullptr);

class Classifier {
 public:
  // Registers parameters under `prefix` in `store`; running statistics live
  // in the classifier itself.
  Classifier(const ClassifierConfig& config, ParamStore& store, const std::string& prefix,
             std::mt19937_64& rng);

  const ClassifierConfig& config() const noexcept { return config_; }

  // N×3×H×W → N logits. Training mode normalizes with batch statistics and
  // updates running statistics (running = 0.9·running + 0.1·batch); eval mode
  // uses the running statistics and mutates nothing.
  ag::Var forward(const ag::Var& x, bool training);
  ag::Var forward_eval(const ag::Var& x) const;

  // Output shape (without batch axis) after the stem and after each stage,
  // and the head when present.
  std::vector<Shape> stage_shapes() const;

  std::map<std::string, Tensor> buffers() const;
  void load_buffers(const std::map<std::string, Tensor>& values, const std::string& context);

  // Sets the final linear layer to zero, so every logit equals zero.
  void zero_head();

 private:
  struct ConvBn {
    std::string name;
    ag::Var weight, gamma, beta;
    Tensor running_mean, running_var;
    std::size_t stride = 1, pad = 1;
  };

  // Batch statistics of each layer are appended to `stats` in training mode.
  ag::Var run(const ag::Var& x, bool training, std::vector<Shape>* shapes,
              std::vector<std::pair<Tensor, Tensor>>* stats) const;
  void check_input(const ag::Var& x) const;

  ClassifierConfig config_;
  RecalibParams input_gate_, stem_gate_;
  std::vector<ConvBn> layers_;  // layers_[0] is the stem
  ag::Var fc_weight_, fc_bias_;  // 1×W, 1
};

// Single-image convenience: 3×H×W → Logit in eval mode.
Logit classify(const ag::Var& reduced, const Classifier& model);

}  // namespace hyperfake::classifier
