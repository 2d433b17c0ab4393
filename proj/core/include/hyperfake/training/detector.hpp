// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// The trainable part of the pipeline: band attention + mixing + classifier,
// fed with cubes from a frozen reconstruction model.

#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperfake/classifier/classifier.hpp"
#include "hyperfake/data/types.hpp"
#include "hyperfake/param_store.hpp"
#include "hyperfake/spectral/attention.hpp"

namespace hyperfake::training {

struct DetectorConfig {
  spectral::SpectralAttentionConfig spectral;
  classifier::ClassifierConfig classifier;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static DetectorConfig from_json(const nlohmann::json& j);
  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

class DetectorModel {
 public:
  DetectorModel(const DetectorConfig& config, std::uint64_t seed);
  DetectorModel(DetectorModel&&) noexcept = default;
  DetectorModel& operator=(DetectorModel&&) noexcept = default;
  DetectorModel(const DetectorModel&) = delete;
  DetectorModel& operator=(const DetectorModel&) = delete;

  const DetectorConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }
  const spectral::SpectralAttentionParams& spectral() const noexcept { return spectral_; }
  classifier::Classifier& classifier() noexcept { return classifier_; }
  const classifier::Classifier& classifier() const noexcept { return classifier_; }

  struct Reduced {
    ag::Var image;  // 3×H×W
    ag::Var alpha;  // 31×3
    Tensor attn;    // heads×31×31
  };
  // Cube enters as a constant: nothing upstream of it receives gradients.
  Reduced reduce(const HSICube& cube) const;

  struct BatchOutput {
    ag::Var logits;  // [N]
    std::vector<Tensor> alphas;
  };
  BatchOutput forward(std::span<const HSICube* const> cubes, bool training);

  struct Inspection {
    spectral::BandMixing mixing;
    Tensor attn;
    classifier::Logit logit;
  };
  Inspection inspect(const HSICube& cube) const;
  classifier::Logit logit(const HSICube& cube) const;

 private:
  DetectorModel(const DetectorConfig& config, std::mt19937_64 rng);

  DetectorConfig config_;
  ParamStore params_;
  spectral::SpectralAttentionParams spectral_;
  classifier::Classifier classifier_;
};

}  // namespace hyperfake::training
