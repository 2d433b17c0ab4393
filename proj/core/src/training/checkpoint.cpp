// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/archive.hpp"
#include "hyperfake/error.hpp"
#include "hyperfake/training/trainer.hpp"

namespace hyperfake::training {
namespace {

constexpr const char* kParam = "param/";
constexpr const char* kBuffer = "buffer/";
constexpr const char* kAdamM = "adam_m/";
constexpr const char* kAdamV = "adam_v/";

void put_all(std::map<std::string, Tensor>& out, const char* prefix,
             const std::map<std::string, Tensor>& values) {
  for (const auto& [name, t] : values) out.emplace(prefix + name, t);
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  Archive a;
  auto& h = a.header;
  h["format_version"] = TrainState::kFormatVersion;
  h["kind"] = "detector_checkpoint";
  h["configs"] = {{"detector", state.detector.to_json()},
                  {"train", state.train.to_json()},
                  {"recon", state.recon.to_json()}};
  h["step"] = state.step;
  h["epoch"] = state.epoch;
  h["seed"] = state.train.seed;
  h["recon_weights_hash"] = state.recon_weights_hash;
  // Shuffling draws a fresh stream from (seed, epoch), so the next epoch
  // index is the whole generator state.
  h["rng_state"] = {{"seed", state.train.seed}, {"next_epoch", state.epoch}};
  h["adam_t"] = state.adam.t;
  h["history"] = history_json(state.history);
  put_all(a.arrays, kParam, state.params);
  put_all(a.arrays, kBuffer, state.buffers);
  put_all(a.arrays, kAdamM, state.adam.m);
  put_all(a.arrays, kAdamV, state.adam.v);
  write_archive(a, path);
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  Archive a = read_archive(path);
  const auto& h = a.header;
  const std::string where = path.string();
  TrainState s;
  try {
    if (h.value("kind", "") != "detector_checkpoint") {
      throw CheckpointError(where + ": not a detector checkpoint");
    }
    const int version = h.at("format_version").get<int>();
    if (version != TrainState::kFormatVersion) {
      throw CheckpointError(where + ": checkpoint format version " + std::to_string(version) +
                            ", expected " + std::to_string(TrainState::kFormatVersion));
    }
    s.detector = DetectorConfig::from_json(h.at("configs").at("detector"));
    s.train = TrainConfig::from_json(h.at("configs").at("train"));
    s.recon = recon::ReconConfig::from_json(h.at("configs").at("recon"));
    s.step = h.at("step").get<std::uint64_t>();
    s.epoch = h.at("epoch").get<std::size_t>();
    s.recon_weights_hash = h.at("recon_weights_hash").get<std::string>();
    s.adam.t = h.at("adam_t").get<std::uint64_t>();
    for (const auto& e : h.at("history")) s.history.push_back(HistoryEntry::from_json(e));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(where + ": malformed header: " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError(where + ": " + e.what());
  }
  for (auto& [name, t] : a.arrays) {
    auto strip = [&](const char* prefix, std::map<std::string, Tensor>& into) {
      const std::string p(prefix);
      if (name.rfind(p, 0) != 0) return false;
      into.emplace(name.substr(p.size()), std::move(t));
      return true;
    };
    if (!strip(kParam, s.params) && !strip(kBuffer, s.buffers) && !strip(kAdamM, s.adam.m) &&
        !strip(kAdamV, s.adam.v)) {
      throw CheckpointError(where + ": unexpected array '" + name + "'");
    }
  }
  for (const auto& [name, t] : s.params) {
    const auto m = s.adam.m.find(name);
    const auto v = s.adam.v.find(name);
    if (m == s.adam.m.end() || v == s.adam.v.end() || m->second.shape() != t.shape() ||
        v->second.shape() != t.shape()) {
      throw CheckpointError(where + ": optimizer moments missing or mis-shaped for " + name);
    }
  }
  if (s.adam.m.size() != s.params.size() || s.adam.v.size() != s.params.size()) {
    throw CheckpointError(where + ": optimizer moments for unknown parameters");
  }
  return s;
}

TrainState capture_state(const DetectorModel& model, const AdamState& adam) {
  TrainState s;
  s.detector = model.config();
  s.params = model.params().snapshot();
  s.buffers = model.classifier().buffers();
  s.adam = adam;
  return s;
}

DetectorModel restore_model(const TrainState& state) {
  DetectorModel model(state.detector, state.train.seed);
  model.params().load(state.params, "checkpoint");
  model.classifier().load_buffers(state.buffers, "checkpoint");
  return model;
}

}  // namespace hyperfake::training
