// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "hyperfake/archive.hpp"
#include "hyperfake/data/synth.hpp"
#include "hyperfake/error.hpp"
#include "hyperfake/eval/metrics.hpp"
#include "hyperfake/hash.hpp"
#include "hyperfake/training/trainer.hpp"
#include "temp_dir.hpp"

namespace hyperfake::training {
namespace {

using hyperfake::testing::TempDir;

bool bit_equal(const std::map<std::string, Tensor>& a, const std::map<std::string, Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (const auto& [name, t] : a) {
    auto it = b.find(name);
    if (it == b.end() || !(it->second.shape() == t.shape())) return false;
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (std::bit_cast<std::uint64_t>(t[i]) != std::bit_cast<std::uint64_t>(it->second[i])) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------- schedule

TEST(CosineLr, Endpoints) {
  EXPECT_EQ(cosine_lr(0, 100, 1e-3, 1e-5), 1e-3);
  EXPECT_NEAR(cosine_lr(100, 100, 1e-3, 1e-5), 1e-5, 1e-18);
  EXPECT_NEAR(cosine_lr(50, 100, 1e-3, 1e-5), 5.05e-4, 1e-15);
}

TEST(CosineLr, MatchesClosedForm) {
  for (std::uint64_t s = 0; s <= 37; ++s) {
    const double want = 2e-5 + 0.5 * (3e-3 - 2e-5) * (1 + std::cos(M_PI * double(s) / 37.0));
    EXPECT_NEAR(cosine_lr(s, 37, 3e-3, 2e-5), want, 1e-15);
  }
}

TEST(CosineLr, NonIncreasing) {
  double prev = std::numeric_limits<double>::infinity();
  for (std::uint64_t s = 0; s <= 500; ++s) {
    const double lr = cosine_lr(s, 500, 1e-3, 1e-5);
    EXPECT_LE(lr, prev);
    EXPECT_GE(lr, 1e-5 - 1e-18);
    prev = lr;
  }
}

TEST(CosineLr, DomainErrors) {
  EXPECT_THROW(cosine_lr(0, 0, 1e-3, 1e-5), DomainError);
  EXPECT_THROW(cosine_lr(11, 10, 1e-3, 1e-5), DomainError);
}

// ---------------------------------------------------------------- adam

TEST(Adam, ZeroGradientLeavesEverythingUnchanged) {
  ParamStore store;
  std::mt19937_64 rng(3);
  store.add("w", normal_init({4, 3}, 1.0, rng));
  const auto before = store.snapshot();
  AdamState state = AdamState::for_params(store);
  store.zero_grad();
  adam_step(store, state, 1e-2, {});
  EXPECT_TRUE(bit_equal(before, store.snapshot()));
  for (std::size_t i = 0; i < state.m.at("w").size(); ++i) {
    EXPECT_EQ(state.m.at("w")[i], 0.0);
    EXPECT_EQ(state.v.at("w")[i], 0.0);
  }
}

TEST(Adam, FirstStepMovesByLearningRate) {
  // With bias correction the first update is lr·g/(|g| + eps).
  Tensor p({1}, {0.5}), g({1}, {2.0}), m({1}), v({1});
  adam_update(p, g, m, v, 1, 0.1, {});
  EXPECT_NEAR(p[0], 0.5 - 0.1 * 2.0 / (2.0 + 1e-8), 1e-12);
  EXPECT_NEAR(m[0], 0.2, 1e-12);
  EXPECT_NEAR(v[0], 0.004, 1e-12);
}

TEST(Adam, TwoStepOracle) {
  const AdamHyper h{0.8, 0.99, 1e-6};
  Tensor p({1}, {1.0}), m({1}), v({1});
  double om = 0, ov = 0, op = 1.0;
  const double grads[] = {0.3, -1.2};
  for (int t = 1; t <= 2; ++t) {
    const double gr = grads[t - 1];
    adam_update(p, Tensor({1}, {gr}), m, v, t, 0.05, h);
    om = h.beta1 * om + (1 - h.beta1) * gr;
    ov = h.beta2 * ov + (1 - h.beta2) * gr * gr;
    const double mh = om / (1 - std::pow(h.beta1, t)), vh = ov / (1 - std::pow(h.beta2, t));
    op -= 0.05 * mh / (std::sqrt(vh) + h.eps);
    EXPECT_NEAR(p[0], op, 1e-12);
  }
}

TEST(Adam, DeterministicAcrossRuns) {
  auto run = [] {
    ParamStore store;
    std::mt19937_64 rng(9);
    ag::Var w = store.add("w", normal_init({5}, 1.0, rng));
    AdamState state = AdamState::for_params(store);
    for (int i = 0; i < 10; ++i) {
      store.zero_grad();
      ag::sum(ag::mul(w, w)).backward();
      adam_step(store, state, 1e-2, {});
    }
    return store.snapshot();
  };
  EXPECT_TRUE(bit_equal(run(), run()));
}

TEST(Adam, NonFiniteGradientNamesParameterAndWritesNothing) {
  ParamStore store;
  ag::Var a = store.add("alpha", Tensor({2}, {1.0, 2.0}));
  ag::Var b = store.add("beta", Tensor({1}, {3.0}));
  AdamState state = AdamState::for_params(store);
  store.zero_grad();
  ag::add(ag::sum(ag::mul(a, a)), ag::sum(b)).backward();
  b.node()->grad_buffer()[0] = std::numeric_limits<double>::quiet_NaN();
  const auto before = store.snapshot();
  try {
    adam_step(store, state, 1e-2, {});
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("beta"), std::string::npos) << e.what();
  }
  EXPECT_TRUE(bit_equal(before, store.snapshot()));
  EXPECT_EQ(state.t, 0u);
}

TEST(Adam, StateCoversTrainableParametersOnly) {
  ParamStore store;
  store.add("trained", Tensor({2}));
  store.add("fixed", Tensor({2}), false);
  const AdamState s = AdamState::for_params(store);
  EXPECT_EQ(s.m.count("trained"), 1u);
  EXPECT_EQ(s.m.count("fixed"), 0u);
  EXPECT_EQ(s.v.size(), 1u);
}

// ---------------------------------------------------------------- config

TEST(TrainConfigTest, SetRecognizedAndUnknownKeys) {
  TrainConfig c;
  EXPECT_TRUE(c.set("epochs", "7"));
  EXPECT_TRUE(c.set("lr0", "0.002"));
  EXPECT_TRUE(c.set("batch_size", "3"));
  EXPECT_EQ(c.epochs, 7u);
  EXPECT_EQ(c.lr0, 0.002);
  EXPECT_EQ(c.batch_size, 3u);
  EXPECT_FALSE(c.set("learning_rate", "1"));
  EXPECT_THROW(c.set("epochs", "seven"), ConfigError);
  EXPECT_THROW(c.set("epochs", "-1"), ConfigError);
}

TEST(TrainConfigTest, ValidateRejectsBadValues) {
  TrainConfig c;
  c.validate();
  TrainConfig z = c;
  z.epochs = 0;
  EXPECT_THROW(z.validate(), ConfigError);
  TrainConfig b = c;
  b.batch_size = 0;
  EXPECT_THROW(b.validate(), ConfigError);
  TrainConfig l = c;
  l.lr_min = 1.0;
  EXPECT_THROW(l.validate(), ConfigError);
}

TEST(TrainConfigTest, JsonRoundTrip) {
  TrainConfig c;
  c.epochs = 3;
  c.lr_min = 2e-6;
  c.seed = 99;
  const TrainConfig back = TrainConfig::from_json(c.to_json());
  EXPECT_TRUE(back.same_schedule(c));
  EXPECT_EQ(back.seed, 99u);
}

TEST(ParseKeyValues, CommentsAndWhitespace) {
  const auto kv = parse_key_values("# header\nepochs = 5\n\n  lr0=0.01  # trailing\n");
  ASSERT_EQ(kv.size(), 2u);
  EXPECT_EQ(kv[0], (std::pair<std::string, std::string>{"epochs", "5"}));
  EXPECT_EQ(kv[1], (std::pair<std::string, std::string>{"lr0", "0.01"}));
}

TEST(ParseKeyValues, MalformedAndRepeated) {
  EXPECT_THROW(parse_key_values("epochs 5\n"), ConfigError);
  EXPECT_THROW(parse_key_values("epochs = 5\nepochs = 6\n"), ConfigError);
  try {
    parse_key_values("a = 1\n= 2\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2"), std::string::npos);
  }
}

// ---------------------------------------------------------------- pipeline

recon::ReconConfig tiny_recon() {
  recon::ReconConfig c;
  c.n_stages = 1;
  c.feature_channels = 8;
  c.n_heads = 2;
  c.flexi_downsample = 4;
  c.resolution = {16, 16};
  return c;
}

DetectorConfig tiny_detector() {
  DetectorConfig d;
  d.spectral.pool_size = 4;
  d.spectral.attn_dim = 8;
  d.spectral.heads = 1;
  d.classifier.input_resolution = {16, 16};
  return d;
}

class Pipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("hf_train");
    SynthOptions o;
    o.n_per_class = 6;
    o.resolution = {16, 16};
    o.seed = 5;
    manifest_ = new DatasetManifest(synth_dataset(o, dir_->path() / "data"));
    recon_ = new recon::ReconstructionModel(recon::freeze(recon::ReconstructionModel(tiny_recon(), 11)));
  }
  static void TearDownTestSuite() {
    delete recon_;
    delete manifest_;
    delete dir_;
  }

  TrainConfig config(const std::string& sub, std::size_t epochs = 5) const {
    TrainConfig c;
    c.epochs = epochs;
    c.batch_size = 4;
    c.seed = 21;
    c.eval_every = 1;
    c.checkpoint_dir = dir_->path() / sub;
    return c;
  }

  static TempDir* dir_;
  static DatasetManifest* manifest_;
  static recon::ReconstructionModel* recon_;
};

TempDir* Pipeline::dir_ = nullptr;
DatasetManifest* Pipeline::manifest_ = nullptr;
recon::ReconstructionModel* Pipeline::recon_ = nullptr;

TEST_F(Pipeline, RejectsUnfrozenReconstruction) {
  const recon::ReconstructionModel live(tiny_recon(), 11);
  EXPECT_THROW(train(*manifest_, live, tiny_detector(), config("unfrozen")), ContractError);
}

TEST_F(Pipeline, RejectsSingleLabelTrainSplit) {
  DatasetManifest m = *manifest_;
  for (SampleRecord& r : m.records) {
    if (r.label == 0 && r.split == Split::kTrain) r.split = Split::kTest;
  }
  EXPECT_THROW(train(m, *recon_, tiny_detector(), config("single")), ValidationError);
}

TEST_F(Pipeline, ReconstructionStaysFrozenAndAlphasStayStochastic) {
  const auto before = recon_->params().snapshot();
  std::size_t steps = 0;
  double worst = 0.0;
  TrainOptions opt;
  opt.on_step = [&](const StepInfo& s) {
    ++steps;
    for (const Tensor& a : *s.alphas) {
      for (std::size_t j = 0; j < 3; ++j) {
        double col = 0.0;
        for (std::size_t b = 0; b < kSpectralBands; ++b) col += a[b * 3 + j];
        worst = std::max(worst, std::abs(col - 1.0));
      }
    }
  };
  train(*manifest_, *recon_, tiny_detector(), config("frozen", 5), opt);
  EXPECT_GE(steps, 10u);
  EXPECT_LE(worst, 1e-6);
  EXPECT_TRUE(bit_equal(before, recon_->params().snapshot()));
  for (const auto& [name, p] : recon_->params().items()) {
    EXPECT_FALSE(p.requires_grad()) << name;
  }
}

TEST_F(Pipeline, FinalStepUsesMinimumLearningRate) {
  std::vector<double> lrs;
  TrainOptions opt;
  opt.on_step = [&](const StepInfo& s) { lrs.push_back(s.lr); };
  const TrainConfig c = config("lr", 3);
  train(*manifest_, *recon_, tiny_detector(), c, opt);
  ASSERT_FALSE(lrs.empty());
  EXPECT_EQ(lrs.front(), c.lr0);
  EXPECT_NEAR(lrs.back(), c.lr_min, 1e-15);
}

TEST_F(Pipeline, DeterministicAndResumable) {
  // The checkpoint directory is part of the stored config, so reruns share it.
  const std::string first_hash =
      sha256_file(train(*manifest_, *recon_, tiny_detector(), config("full")).checkpoint);
  const TrainResult full = train(*manifest_, *recon_, tiny_detector(), config("full"));
  EXPECT_EQ(first_hash, sha256_file(full.checkpoint));

  TrainOptions stop;
  stop.stop_after_epochs = 3;
  const TrainResult first = train(*manifest_, *recon_, tiny_detector(), config("split"), stop);
  EXPECT_EQ(first.history.size(), 3u);
  TrainOptions resume;
  resume.resume_from = first.checkpoint;
  const TrainResult second = train(*manifest_, *recon_, tiny_detector(), config("split"), resume);
  ASSERT_EQ(second.history.size(), 5u);
  EXPECT_EQ(second.history, full.history);

  const TrainState a = load_checkpoint(full.checkpoint);
  const TrainState b = load_checkpoint(second.checkpoint);
  EXPECT_TRUE(bit_equal(a.params, b.params));
  EXPECT_TRUE(bit_equal(a.buffers, b.buffers));
  EXPECT_TRUE(bit_equal(a.adam.m, b.adam.m));
  EXPECT_EQ(a.step, b.step);
  EXPECT_EQ(a.adam.t, b.adam.t);
}

TEST_F(Pipeline, ResumeAgainstOtherReconstructionIsRejected) {
  TrainOptions stop;
  stop.stop_after_epochs = 1;
  const TrainResult first = train(*manifest_, *recon_, tiny_detector(), config("prov", 2), stop);
  const recon::ReconstructionModel other = recon::freeze(recon::ReconstructionModel(tiny_recon(), 12));
  TrainOptions resume;
  resume.resume_from = first.checkpoint;
  EXPECT_THROW(train(*manifest_, other, tiny_detector(), config("prov", 2), resume), IntegrityError);
}

TEST_F(Pipeline, CheckpointRoundTripIsBitExact) {
  const TrainResult r = train(*manifest_, *recon_, tiny_detector(), config("ckpt", 1));
  const TrainState s = load_checkpoint(r.checkpoint);
  const std::filesystem::path copy = dir_->path() / "copy.hfc";
  save_checkpoint(s, copy);
  const TrainState t = load_checkpoint(copy);
  EXPECT_TRUE(bit_equal(s.params, t.params));
  EXPECT_TRUE(bit_equal(s.buffers, t.buffers));
  EXPECT_TRUE(bit_equal(s.adam.m, t.adam.m));
  EXPECT_TRUE(bit_equal(s.adam.v, t.adam.v));
  EXPECT_EQ(s.history, t.history);
  EXPECT_EQ(s.detector, t.detector);
  EXPECT_EQ(s.recon, t.recon);
  EXPECT_EQ(s.recon_weights_hash, t.recon_weights_hash);
  EXPECT_EQ(sha256_file(r.checkpoint), sha256_file(copy));

  const DetectorModel model = restore_model(s);
  EXPECT_TRUE(bit_equal(model.params().snapshot(), s.params));
}

TEST_F(Pipeline, CorruptCheckpointsAreRejected) {
  const TrainResult r = train(*manifest_, *recon_, tiny_detector(), config("corrupt", 1));

  const std::filesystem::path bad_magic = dir_->path() / "bad_magic.hfc";
  std::filesystem::copy_file(r.checkpoint, bad_magic);
  {
    std::fstream f(bad_magic, std::ios::in | std::ios::out | std::ios::binary);
    f.write("XXXX", 4);
  }
  EXPECT_THROW(load_checkpoint(bad_magic), CheckpointError);

  Archive a = read_archive(r.checkpoint);
  a.header["format_version"] = TrainState::kFormatVersion + 1;
  const std::filesystem::path future = dir_->path() / "future.hfc";
  write_archive(a, future);
  EXPECT_THROW(load_checkpoint(future), CheckpointError);

  const std::filesystem::path truncated = dir_->path() / "truncated.hfc";
  std::filesystem::copy_file(r.checkpoint, truncated);
  std::filesystem::resize_file(truncated, std::filesystem::file_size(truncated) / 2);
  EXPECT_THROW(load_checkpoint(truncated), CheckpointError);
}

TEST_F(Pipeline, CubeCachePersistsAcrossInstances) {
  const TempDir cache_dir("hf_cache");
  const std::vector<SampleRecord> train_set = manifest_->select(Split::kTrain);
  CubeCache first(*recon_, cache_dir.path());
  const HSICube& c1 = first.get(*manifest_, train_set[0]);
  first.get(*manifest_, train_set[0]);
  EXPECT_EQ(first.computed(), 1u);
  CubeCache second(*recon_, cache_dir.path());
  const HSICube& c2 = second.get(*manifest_, train_set[0]);
  EXPECT_EQ(second.computed(), 0u);
  ASSERT_EQ(c1.values().size(), c2.values().size());
  for (std::size_t i = 0; i < c1.values().size(); ++i) {
    EXPECT_EQ(static_cast<float>(c1.values()[i]), static_cast<float>(c2.values()[i]));
  }
}

// ---------------------------------------------------------------- evaluate

TEST_F(Pipeline, ZeroHeadGivesChanceAuc) {
  const TrainResult r = train(*manifest_, *recon_, tiny_detector(), config("zero", 1));
  TrainState s = load_checkpoint(r.checkpoint);
  s.params.at("classifier.head.weight").fill(0.0);
  s.params.at("classifier.head.bias").fill(0.0);
  const std::filesystem::path zero = dir_->path() / "zero.hfc";
  save_checkpoint(s, zero);
  const eval::MetricsReport rep = eval::evaluate(zero, *manifest_, Split::kVal, *recon_);
  EXPECT_DOUBLE_EQ(rep.auc, 0.5);
  std::size_t fakes = 0;
  const auto val = manifest_->select(Split::kVal);
  for (const SampleRecord& rec : val) fakes += rec.label;
  // Every score is exactly 0.5, which counts as fake at the default threshold.
  EXPECT_DOUBLE_EQ(rep.accuracy, double(fakes) / double(val.size()));
  EXPECT_EQ(rep.n, val.size());
}

TEST_F(Pipeline, EvaluationIgnoresRecordOrderAndChecksProvenance) {
  const TrainResult r = train(*manifest_, *recon_, tiny_detector(), config("order", 2));
  const eval::MetricsReport base = eval::evaluate(r.checkpoint, *manifest_, Split::kVal, *recon_);
  DatasetManifest shuffled = *manifest_;
  std::mt19937_64 rng(4);
  std::shuffle(shuffled.records.begin(), shuffled.records.end(), rng);
  const eval::MetricsReport other = eval::evaluate(r.checkpoint, shuffled, Split::kVal, *recon_);
  EXPECT_EQ(base.to_json().dump(), other.to_json().dump());
  EXPECT_EQ(base.checkpoint_hash, sha256_file(r.checkpoint));
  EXPECT_EQ(base.recon_hash, recon_->weights_hash());

  const recon::ReconstructionModel wrong = recon::freeze(recon::ReconstructionModel(tiny_recon(), 99));
  EXPECT_THROW(eval::evaluate(r.checkpoint, *manifest_, Split::kVal, wrong), IntegrityError);
}

}  // namespace
}  // namespace hyperfake::training
