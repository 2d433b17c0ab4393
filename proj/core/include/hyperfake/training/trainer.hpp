// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperfake/data/manifest.hpp"
#include "hyperfake/recon/model.hpp"
#include "hyperfake/training/detector.hpp"
#include "hyperfake/training/optim.hpp"

namespace hyperfake::training {

struct TrainConfig {
  std::size_t epochs = 60;
  std::size_t batch_size = 16;
  double lr0 = 1e-3;
  double lr_min = 1e-5;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  std::size_t eval_every = 10;
  std::filesystem::path checkpoint_dir = "checkpoints";

  void validate() const;
  // Recognized keys are the field names above. Returns false for an unknown
  // key; ConfigError for a malformed value.
  bool set(const std::string& key, const std::string& value);
  nlohmann::ordered_json to_json() const;
  static TrainConfig from_json(const nlohmann::json& j);
  AdamHyper adam() const { return {adam_beta1, adam_beta2, adam_eps}; }

  // Equal in everything that shapes the optimization trajectory.
  bool same_schedule(const TrainConfig& other) const;
};

// Flat "key = value" text; '#' starts a comment. ConfigError with the line
// number on malformed lines or repeated keys.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text);

struct HistoryEntry {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  std::optional<double> val_acc;

  nlohmann::ordered_json to_json() const;
  static HistoryEntry from_json(const nlohmann::json& j);
  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

nlohmann::ordered_json history_json(const std::vector<HistoryEntry>& history);

// Everything needed to rebuild the detector and continue optimization.
struct TrainState {
  static constexpr int kFormatVersion = 1;

  DetectorConfig detector;
  TrainConfig train;
  recon::ReconConfig recon;
  std::string recon_weights_hash;
  std::uint64_t step = 0;
  std::size_t epoch = 0;  // completed epochs
  std::map<std::string, Tensor> params, buffers;
  AdamState adam;
  std::vector<HistoryEntry> history;
};

// Header: {format_version, configs, step, epoch, seed, recon_weights_hash,
// rng_state, history}; arrays "param/…", "buffer/…", "adam_m/…", "adam_v/…".
void save_checkpoint(const TrainState& state, const std::filesystem::path& path);
TrainState load_checkpoint(const std::filesystem::path& path);

TrainState capture_state(const DetectorModel& model, const AdamState& adam);
DetectorModel restore_model(const TrainState& state);

// Reconstructions of manifest frames, computed once per (weights, frame
// bytes, resolution). With a directory, cubes also persist as HSC1 files.
class CubeCache {
 public:
  CubeCache(const recon::ReconstructionModel& recon, std::optional<std::filesystem::path> dir);

  const HSICube& get(const DatasetManifest& manifest, const SampleRecord& record);

  std::size_t computed() const noexcept { return computed_; }

 private:
  const recon::ReconstructionModel& recon_;
  std::string weights_hash_;
  std::optional<std::filesystem::path> dir_;
  std::map<std::string, std::string> key_by_path_;
  std::map<std::string, HSICube> cubes_;
  std::size_t computed_ = 0;
};

struct StepInfo {
  std::uint64_t step;  // 0-based index of the update just applied
  std::size_t epoch;   // 0-based
  double lr;
  double loss;
  const std::vector<Tensor>* alphas;
};

struct TrainOptions {
  std::optional<std::size_t> stop_after_epochs;  // checkpoint and return early
  std::optional<std::filesystem::path> resume_from;
  std::optional<std::filesystem::path> cache_dir;
  std::function<void(const StepInfo&)> on_step;
  std::function<void(const HistoryEntry&)> on_epoch;
};

struct TrainResult {
  std::filesystem::path checkpoint;
  std::vector<HistoryEntry> history;
};

inline constexpr const char* kCheckpointFile = "checkpoint.hfc";

// Preconditions: recon frozen (ContractError), both labels in the train
// split (ValidationError), recon resolution equals the manifest's.
TrainResult train(const DatasetManifest& manifest, const recon::ReconstructionModel& recon,
                  const DetectorConfig& detector, const TrainConfig& config,
                  const TrainOptions& options = {});

}  // namespace hyperfake::training
