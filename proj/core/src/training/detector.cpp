// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/training/detector.hpp"

#include <algorithm>

#include "hyperfake/error.hpp"

namespace hyperfake::training {

void DetectorConfig::validate() const {
  spectral.validate();
  classifier.validate();
  const Resolution& r = classifier.input_resolution;
  if (spectral.pool_size > std::min(r.height, r.width)) {
    throw ConfigError("detector: pool_size " + std::to_string(spectral.pool_size) +
                      " exceeds the input resolution");
  }
}

nlohmann::ordered_json DetectorConfig::to_json() const {
  return {{"spectral", spectral.to_json()}, {"classifier", classifier.to_json()}};
}

DetectorConfig DetectorConfig::from_json(const nlohmann::json& j) {
  DetectorConfig c;
  c.spectral = spectral::SpectralAttentionConfig::from_json(j.at("spectral"));
  c.classifier = classifier::ClassifierConfig::from_json(j.at("classifier"));
  return c;
}

DetectorModel::DetectorModel(const DetectorConfig& config, std::uint64_t seed)
    : DetectorModel(config, [seed] {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          0xDE7Eu};
        return std::mt19937_64(seq);
      }()) {}

DetectorModel::DetectorModel(const DetectorConfig& config, std::mt19937_64 rng)
    : config_((config.validate(), config)),
      spectral_(spectral::make_spectral_params(config_.spectral, params_, "spectral.", rng)),
      classifier_(config_.classifier, params_, "classifier.", rng) {}

DetectorModel::Reduced DetectorModel::reduce(const HSICube& cube) const {
  const ag::Var c(cube.to_tensor());
  const ag::Var x = spectral::band_descriptors(c, config_.spectral.pool_size);
  spectral::AttentionOutput sa = spectral::spectral_attention(x, spectral_);
  const ag::Var alpha = spectral::mixing_weights(sa.values, spectral_);
  return {spectral::reduce_bands(c, alpha), alpha, std::move(sa.attn)};
}

DetectorModel::BatchOutput DetectorModel::forward(std::span<const HSICube* const> cubes,
                                                  bool training) {
  if (cubes.empty()) throw DomainError("detector: empty batch");
  std::vector<ag::Var> images;
  BatchOutput out;
  for (const HSICube* cube : cubes) {
    Reduced r = reduce(*cube);
    images.push_back(r.image);
    out.alphas.push_back(r.alpha.value());
  }
  out.logits = classifier_.forward(ag::stack(images), training);
  return out;
}

DetectorModel::Inspection DetectorModel::inspect(const HSICube& cube) const {
  Reduced r = reduce(cube);
  const ag::Var batch = ag::reshape(r.image, {1, 3, cube.height(), cube.width()});
  return {spectral::BandMixing(r.alpha.value()), std::move(r.attn),
          classifier::Logit(classifier_.forward_eval(batch).value()[0])};
}

classifier::Logit DetectorModel::logit(const HSICube& cube) const { return inspect(cube).logit; }

}  // namespace hyperfake::training
