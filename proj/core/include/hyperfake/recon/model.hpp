// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperfake/data/types.hpp"
#include "hyperfake/param_store.hpp"
#include "hyperfake/recon/attention.hpp"

namespace hyperfake::recon {

struct ReconConfig {
  std::size_t n_stages = 3;
  std::size_t feature_channels = 32;
  std::size_t n_heads = 4;
  std::size_t flexi_downsample = 4;
  Resolution resolution;  // working resolution the FlexiAttention projections are sized for
  static constexpr std::size_t out_bands = kSpectralBands;

  void validate() const;
  nlohmann::ordered_json to_json() const;
  static ReconConfig from_json(const nlohmann::json& j);
  friend bool operator==(const ReconConfig&, const ReconConfig&) = default;
};

// Multi-stage spectral-wise transformer mapping RGB to 31 bands:
//
//   embed (3×3 conv, 3→F)
//   n_stages × [SAB → stride-2 conv → FlexiAttention → SAB → upsample+1×1
//               → concat skip, 1×1 fuse → SAB → 1×1 out] + stage residual
//   head (3×3 conv, F→31) + learned 1×1 expansion of the RGB input (3→31)
//
// Move-only: parameters are shared handles, use clone() for a deep copy.
class ReconstructionModel {
 public:
  ReconstructionModel(ReconConfig config, std::uint64_t seed);
  ReconstructionModel(ReconstructionModel&&) noexcept = default;
  ReconstructionModel& operator=(ReconstructionModel&&) noexcept = default;
  ReconstructionModel(const ReconstructionModel&) = delete;
  ReconstructionModel& operator=(const ReconstructionModel&) = delete;

  ReconstructionModel clone() const;

  const ReconConfig& config() const noexcept { return config_; }
  ParamStore& params() noexcept { return params_; }
  const ParamStore& params() const noexcept { return params_; }

  bool frozen() const noexcept { return frozen_; }
  void freeze();

  // Differentiable forward pass: 3×H×W → 31×H×W.
  ag::Var forward(const ag::Var& rgb) const;

  // SHA-256 of the parameter payload; stable across save/load.
  std::string weights_hash() const;

  // Writes the weight archive at `path` and the config sidecar at
  // `path` + ".json".
  void save(const std::filesystem::path& path) const;

 private:
  struct Stage {
    SabWeights encoder;
    ag::Var down;  // 2F×F×2×2
    FlexiWeights flexi;
    SabWeights bottleneck;
    ag::Var up;    // F×2F×1×1
    ag::Var fuse;  // F×2F×1×1
    SabWeights decoder;
    ag::Var out;   // F×F×1×1
  };

  void build(std::uint64_t seed);
  SabWeights make_sab(const std::string& prefix, std::size_t channels, std::mt19937_64& rng);
  SmsaWeights make_smsa(const std::string& prefix, std::size_t width, std::mt19937_64& rng);

  ReconConfig config_;
  ParamStore params_;
  bool frozen_ = false;
  ag::Var embed_, head_, skip_;
  std::vector<Stage> stages_;
};

// Frozen-or-not inference returning a float32-rounded cube.
HSICube reconstruct(const RGBFrame& rgb, const ReconstructionModel& model);

ReconstructionModel load_recon_weights(const std::filesystem::path& path,
                                       const std::optional<ReconConfig>& expected = std::nullopt);
ReconstructionModel freeze(ReconstructionModel model);

// 20·log10(peak / RMSE) over every entry; +infinity when the cubes match.
double psnr(const HSICube& pred, const HSICube& ref, double peak = 1.0);
inline bool psnr_identical(double db) { return db == std::numeric_limits<double>::infinity(); }

}  // namespace hyperfake::recon
