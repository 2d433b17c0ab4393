// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "hyperfake/data/cube_io.hpp"
#include "hyperfake/data/image_io.hpp"
#include "hyperfake/error.hpp"
#include "hyperfake/hash.hpp"

namespace hyperfake::training {

CubeCache::CubeCache(const recon::ReconstructionModel& recon, std::optional<std::filesystem::path> dir)
    : recon_(recon), weights_hash_(recon.weights_hash()), dir_(std::move(dir)) {
  if (dir_) std::filesystem::create_directories(*dir_);
}

const HSICube& CubeCache::get(const DatasetManifest& manifest, const SampleRecord& record) {
  const std::filesystem::path frame = manifest.resolve(record);
  const Resolution& res = recon_.config().resolution;
  if (!(manifest.resolution == res)) {
    throw ConfigError("reconstruction model resolution differs from the manifest's");
  }
  auto kit = key_by_path_.find(frame.string());
  if (kit == key_by_path_.end()) {
    const std::string key = sha256_hex(weights_hash_ + ":" + sha256_file(frame) + ":" +
                                       std::to_string(res.height) + "x" + std::to_string(res.width));
    kit = key_by_path_.emplace(frame.string(), key).first;
  }
  const std::string& key = kit->second;
  if (auto it = cubes_.find(key); it != cubes_.end()) return it->second;

  if (dir_) {
    const std::filesystem::path file = *dir_ / (key + ".hsc1");
    if (std::filesystem::exists(file)) {
      HSICube cube = read_cube(file);
      if (cube.height() == res.height && cube.width() == res.width) {
        return cubes_.emplace(key, std::move(cube)).first->second;
      }
    }
  }
  HSICube cube = recon::reconstruct(load_frame(manifest, record), recon_);
  ++computed_;
  if (dir_) write_cube(cube, *dir_ / (key + ".hsc1"));
  return cubes_.emplace(key, std::move(cube)).first->second;
}

namespace {

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::size_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(epoch), 0x5ABu};
  std::mt19937_64 rng(seq);
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::optional<double> split_accuracy(const DetectorModel& model, CubeCache& cache,
                                     const DatasetManifest& manifest,
                                     const std::vector<SampleRecord>& records) {
  if (records.empty()) return std::nullopt;
  std::size_t correct = 0;
  for (const SampleRecord& r : records) {
    const int label = model.logit(cache.get(manifest, r)).value >= 0.0 ? 1 : 0;
    correct += label == r.label ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

}  // namespace

TrainResult train(const DatasetManifest& manifest, const recon::ReconstructionModel& recon,
                  const DetectorConfig& detector, const TrainConfig& config,
                  const TrainOptions& options) {
  if (!recon.frozen()) throw ContractError("train: reconstruction model must be frozen");
  config.validate();
  detector.validate();
  if (!(detector.classifier.input_resolution == manifest.resolution)) {
    throw ConfigError("train: classifier input resolution differs from the manifest's");
  }
  manifest.require_both_labels(Split::kTrain);
  const std::vector<SampleRecord> train_set = manifest.select(Split::kTrain);
  const std::vector<SampleRecord> val_set = manifest.select(Split::kVal);

  CubeCache cache(recon, options.cache_dir);
  const std::string recon_hash = recon.weights_hash();

  std::optional<DetectorModel> model;
  AdamState adam;
  std::uint64_t step = 0;
  std::size_t first_epoch = 0;
  std::vector<HistoryEntry> history;
  if (options.resume_from) {
    TrainState state = load_checkpoint(*options.resume_from);
    if (!(state.detector == detector)) {
      throw CheckpointError("resume: detector configuration differs from the checkpoint");
    }
    if (!state.train.same_schedule(config)) {
      throw CheckpointError("resume: training schedule differs from the checkpoint");
    }
    if (state.recon_weights_hash != recon_hash) {
      throw IntegrityError("provenance mismatch: checkpoint was trained against reconstruction " +
                           state.recon_weights_hash + ", got " + recon_hash);
    }
    model.emplace(restore_model(state));
    adam = std::move(state.adam);
    step = state.step;
    first_epoch = state.epoch;
    history = std::move(state.history);
  } else {
    model.emplace(detector, config.seed);
    adam = AdamState::for_params(model->params());
  }

  const std::size_t batches = (train_set.size() + config.batch_size - 1) / config.batch_size;
  const std::uint64_t last_step = static_cast<std::uint64_t>(config.epochs) * batches - 1;
  const std::size_t end_epoch =
      options.stop_after_epochs ? std::min(config.epochs, *options.stop_after_epochs) : config.epochs;

  std::filesystem::create_directories(config.checkpoint_dir);
  const std::filesystem::path ckpt = config.checkpoint_dir / kCheckpointFile;
  auto checkpoint = [&](std::size_t epochs_done) {
    TrainState s = capture_state(*model, adam);
    s.train = config;
    s.recon = recon.config();
    s.recon_weights_hash = recon_hash;
    s.step = step;
    s.epoch = epochs_done;
    s.history = history;
    save_checkpoint(s, ckpt);
  };

  for (std::size_t epoch = first_epoch; epoch < end_epoch; ++epoch) {
    const std::vector<std::size_t> order = epoch_order(train_set.size(), config.seed, epoch);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t b = 0; b < batches; ++b) {
      const std::size_t lo = b * config.batch_size;
      const std::size_t hi = std::min(lo + config.batch_size, train_set.size());
      std::vector<const HSICube*> cubes;
      std::vector<int> labels;
      for (std::size_t i = lo; i < hi; ++i) {
        const SampleRecord& r = train_set[order[i]];
        cubes.push_back(&cache.get(manifest, r));
        labels.push_back(r.label);
      }
      model->params().zero_grad();
      DetectorModel::BatchOutput out = model->forward(cubes, true);
      const ag::Var loss = ag::bce_with_logits(out.logits, labels);
      const double loss_value = loss.value()[0];
      if (!std::isfinite(loss_value)) {
        std::string ids;
        for (std::size_t i = lo; i < hi; ++i) ids += (ids.empty() ? "" : ",") + train_set[order[i]].video_id;
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch + 1) +
                           ", step " + std::to_string(step) + ", batch [" + ids + "]");
      }
      loss.backward();
      const double lr =
          cosine_lr(std::min(step, last_step), std::max<std::uint64_t>(last_step, 1), config.lr0,
                    config.lr_min);
      adam_step(model->params(), adam, lr, config.adam());
      for (std::size_t i = 0; i < labels.size(); ++i) {
        correct += ((out.logits.value()[i] >= 0.0 ? 1 : 0) == labels[i]) ? 1 : 0;
      }
      loss_sum += loss_value * static_cast<double>(labels.size());
      if (options.on_step) options.on_step({step, epoch, lr, loss_value, &out.alphas});
      ++step;
    }
    HistoryEntry entry;
    entry.epoch = epoch + 1;
    entry.train_loss = loss_sum / static_cast<double>(train_set.size());
    entry.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    entry.val_acc = split_accuracy(*model, cache, manifest, val_set);
    history.push_back(entry);
    if (options.on_epoch) options.on_epoch(entry);
    if ((epoch + 1) % config.eval_every == 0 || epoch + 1 == end_epoch) checkpoint(epoch + 1);
  }
  if (first_epoch >= end_epoch) checkpoint(first_epoch);
  return {ckpt, history};
}

}  // namespace hyperfake::training
