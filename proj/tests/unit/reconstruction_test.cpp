// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <random>

#include "generators.hpp"
#include "gradcheck.hpp"
#include "hyperfake/error.hpp"
#include "hyperfake/recon/attention.hpp"
#include "hyperfake/recon/model.hpp"
#include "temp_dir.hpp"

namespace hyperfake::recon {
namespace {

using ag::Var;
using testing::gradcheck;
using testing::random_tensor;

SmsaWeights random_smsa(std::size_t d, std::mt19937_64& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(d));
  return {Var(random_tensor({d, d}, rng, -sd, sd), true), Var(random_tensor({d, d}, rng, -sd, sd), true),
          Var(random_tensor({d, d}, rng, -sd, sd), true), Var(random_tensor({d, d}, rng, -sd, sd), true)};
}

ReconConfig small_config(std::size_t stages, Resolution res) {
  ReconConfig c;
  c.n_stages = stages;
  c.feature_channels = 8;
  c.n_heads = 2;
  c.flexi_downsample = 2;
  c.resolution = res;
  return c;
}

TEST(Smsa, ShapeAndRowStochasticAttention) {
  std::mt19937_64 rng(1);
  const SmsaResult r = smsa(Var(random_tensor({31, 32}, rng)), random_smsa(32, rng), 4);
  EXPECT_EQ(r.output.shape(), (Shape{31, 32}));
  ASSERT_EQ(r.attention.size(), 4u);
  for (const Var& a : r.attention) {
    ASSERT_EQ(a.shape(), (Shape{31, 31}));
    for (std::size_t i = 0; i < 31; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < 31; ++j) s += a.value().at(i, j);
      EXPECT_NEAR(s, 1.0, 1e-6);
    }
  }
}

TEST(Smsa, ZeroValueProjectionGivesZero) {
  std::mt19937_64 rng(2);
  SmsaWeights w = random_smsa(8, rng);
  w.w_v = Var(Tensor({8, 8}));
  Tensor eye({8, 8});
  for (std::size_t i = 0; i < 8; ++i) eye.at(i, i) = 1.0;
  w.w_o = Var(eye);
  const Tensor out = smsa(Var(random_tensor({5, 8}, rng)), w, 2).output.value();
  for (double v : out.values()) EXPECT_EQ(v, 0.0);
}

TEST(Smsa, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(3);
  Var x(random_tensor({4, 8}, rng), true);
  const SmsaWeights w = random_smsa(8, rng);
  const auto r = gradcheck([&] { return ag::sum(smsa(x, w, 2).output); }, {x, w.w_q, w.w_k, w.w_v, w.w_o});
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Smsa, Errors) {
  std::mt19937_64 rng(4);
  Tensor bad = random_tensor({4, 8}, rng);
  bad[3] = NAN;
  EXPECT_THROW(smsa(Var(bad), random_smsa(8, rng), 2), NumericError);
  EXPECT_THROW(smsa(Var(random_tensor({4, 8}, rng)), random_smsa(8, rng), 3), ConfigError);
}

FlexiWeights random_flexi(std::size_t pooled, std::size_t d, std::size_t s, std::mt19937_64& rng) {
  FlexiWeights w;
  w.factor = s;
  w.w_in = Var(random_tensor({pooled, d}, rng, -0.3, 0.3), true);
  w.w_out = Var(random_tensor({d, pooled}, rng, -0.3, 0.3), true);
  w.attn = random_smsa(d, rng);
  return w;
}

TEST(Flexi, ShapeAndTokenCount) {
  std::mt19937_64 rng(5);
  // (16/4)² = 16 pooled positions per channel token.
  const FlexiWeights w = random_flexi(16, 8, 4, rng);
  EXPECT_EQ(w.w_in.shape()[0], 16u);
  const Var out = flexi_attention(Var(random_tensor({31, 16, 16}, rng)), w, 2);
  EXPECT_EQ(out.shape(), (Shape{31, 16, 16}));
}

TEST(Flexi, ZeroOutputProjectionIsPureResidual) {
  std::mt19937_64 rng(6);
  FlexiWeights w = random_flexi(16, 8, 4, rng);
  w.w_out = Var(Tensor({8, 16}));
  const Tensor x = random_tensor({31, 16, 16}, rng);
  const Tensor y = flexi_attention(Var(x), w, 2).value();
  EXPECT_TRUE(bit_equal(x, y));
}

TEST(Flexi, FactorMustDivide) {
  std::mt19937_64 rng(7);
  const FlexiWeights w = random_flexi(16, 8, 4, rng);
  EXPECT_THROW(flexi_attention(Var(random_tensor({4, 18, 16}, rng)), w, 2), ShapeError);
}

TEST(Flexi, GradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  FlexiWeights w = random_flexi(4, 4, 2, rng);
  w.w_in = Var(random_tensor({4, 4}, rng, -1.5, 1.5), true);
  Var x(random_tensor({3, 4, 4}, rng, -2.0, 2.0), true);
  Var probe(random_tensor({3, 4, 4}, rng));
  const auto r = gradcheck([&] { return ag::sum(ag::mul(flexi_attention(x, w, 2), probe)); },
                           {x, w.w_in, w.w_out, w.attn.w_q, w.attn.w_v});
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Reconstruct, DefaultModelShape) {
  std::mt19937_64 rng(9);
  const ReconstructionModel m(ReconConfig{}, 0);
  const HSICube cube = reconstruct(testing::random_frame(64, 64, rng), m);
  EXPECT_EQ(cube.height(), 64u);
  EXPECT_EQ(cube.width(), 64u);
  EXPECT_EQ(cube.values().size(), 31u * 64 * 64);
}

TEST(Reconstruct, ShapeInvarianceAcrossResolutions) {
  std::mt19937_64 rng(10);
  for (Resolution r : {Resolution{8, 8}, Resolution{16, 24}, Resolution{32, 16}}) {
    const ReconstructionModel m(small_config(2, r), 1);
    const HSICube cube = reconstruct(testing::random_frame(r.height, r.width, rng), m);
    EXPECT_EQ(cube.height(), r.height);
    EXPECT_EQ(cube.width(), r.width);
  }
}

TEST(Reconstruct, ZeroInputWithZeroBiasesIsZero) {
  ReconstructionModel m(small_config(2, {16, 16}), 2);
  for (const auto& [name, p] : m.params().items()) {
    if (name.ends_with("beta") || name.ends_with(".b1") || name.ends_with(".b2")) {
      EXPECT_EQ(p.value().max_abs(), 0.0) << name;
    }
  }
  const HSICube cube = reconstruct(RGBFrame(16, 16, std::vector<float>(3 * 16 * 16, 0.0f)), m);
  for (float v : cube.values()) ASSERT_EQ(v, 0.0f);
}

TEST(Reconstruct, Deterministic) {
  std::mt19937_64 rng(11);
  const ReconstructionModel m(small_config(2, {16, 16}), 3);
  const RGBFrame f = testing::random_frame(16, 16, rng);
  EXPECT_EQ(reconstruct(f, m), reconstruct(f, m));
  const ReconstructionModel again(small_config(2, {16, 16}), 3);
  EXPECT_EQ(m.weights_hash(), again.weights_hash());
  EXPECT_EQ(reconstruct(f, m), reconstruct(f, again));
}

TEST(Reconstruct, WrongResolutionIsShapeError) {
  std::mt19937_64 rng(12);
  const ReconstructionModel m(small_config(1, {16, 16}), 4);
  EXPECT_THROW(reconstruct(testing::random_frame(32, 32, rng), m), ShapeError);
}

TEST(Reconstruct, NonFiniteActivationNamesStage) {
  std::mt19937_64 rng(13);
  ReconstructionModel m(small_config(2, {8, 8}), 5);
  m.params().get("stages.1.out.weight").node()->value.fill(INFINITY);
  try {
    reconstruct(testing::random_frame(8, 8, rng), m);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("stage 1"), std::string::npos) << e.what();
  }
}

TEST(Reconstruct, InputGradientOfMean) {
  std::mt19937_64 rng(14);
  const ReconstructionModel m(small_config(1, {16, 16}), 6);
  Var x(random_tensor({3, 16, 16}, rng, 0.0, 1.0), true);
  const auto r = gradcheck([&] { return ag::mean(m.forward(x)); }, {x}, 1e-5, 96);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Reconstruct, ParameterGradients) {
  std::mt19937_64 rng(15);
  const ReconstructionModel m(small_config(1, {8, 8}), 7);
  const Var x(random_tensor({3, 8, 8}, rng, 0.0, 1.0));
  const Var probe(random_tensor({31, 8, 8}, rng));
  std::vector<Var> leaves;
  for (const auto& [name, p] : m.params().items()) leaves.push_back(p);
  const auto r = gradcheck([&] { return ag::sum(ag::mul(m.forward(x), probe)); }, leaves, 1e-5, 6);
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Config, Validation) {
  ReconConfig c;
  c.n_stages = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ReconConfig{};
  c.feature_channels = 30;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ReconConfig{};
  c.flexi_downsample = 3;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ReconConfig{};
  c.resolution = {60, 64};
  EXPECT_THROW(c.validate(), ConfigError);
  EXPECT_EQ(ReconConfig::from_json(ReconConfig{}.to_json()), ReconConfig{});
}

TEST(Weights, SaveLoadIsBitIdentical) {
  testing::TempDir dir;
  const ReconstructionModel m(small_config(2, {16, 16}), 8);
  m.save(dir / "r.hfw");
  const ReconstructionModel back = load_recon_weights(dir / "r.hfw");
  EXPECT_EQ(back.config(), m.config());
  EXPECT_EQ(back.weights_hash(), m.weights_hash());
  const auto a = m.params().snapshot(), b = back.params().snapshot();
  for (const auto& [k, v] : a) EXPECT_TRUE(bit_equal(v, b.at(k))) << k;
}

TEST(Weights, MismatchedStagesIsCheckpointError) {
  testing::TempDir dir;
  ReconstructionModel(small_config(2, {16, 16}), 8).save(dir / "r.hfw");
  EXPECT_THROW(load_recon_weights(dir / "r.hfw", small_config(3, {16, 16})), CheckpointError);
  std::ofstream(dir / "r.hfw.json") << R"({"config":{"n_stages":3}})";
  EXPECT_THROW(load_recon_weights(dir / "r.hfw"), CheckpointError);
}

TEST(Weights, FreezeMarksEverythingNonTrainable) {
  ReconstructionModel m = freeze(ReconstructionModel(small_config(1, {8, 8}), 9));
  EXPECT_TRUE(m.frozen());
  for (const auto& [name, p] : m.params().items()) EXPECT_FALSE(p.requires_grad()) << name;
}

TEST(Psnr, UniformErrorOfPointOne) {
  const std::size_t n = 31 * 4 * 4;
  const HSICube ref(4, 4, std::vector<float>(n, 0.0f));
  const HSICube pred(4, 4, std::vector<float>(n, 0.1f));
  EXPECT_NEAR(psnr(pred, ref), 20.0, 1e-6);
}

TEST(Psnr, IdenticalSentinel) {
  std::mt19937_64 rng(16);
  const HSICube c = testing::random_cube(3, 3, rng);
  EXPECT_TRUE(psnr_identical(psnr(c, c)));
}

TEST(Psnr, MatchesScalarLoop) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    const HSICube a = testing::random_cube(5, 7, rng), b = testing::random_cube(5, 7, rng);
    double se = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
      const double d = static_cast<double>(a.values()[i]) - static_cast<double>(b.values()[i]);
      se += d * d;
    }
    const double rmse = std::sqrt(se / static_cast<double>(a.values().size()));
    EXPECT_NEAR(psnr(a, b, 2.0), 20.0 * std::log10(2.0 / rmse), 1e-9);
  }
}

TEST(Psnr, Errors) {
  std::mt19937_64 rng(18);
  EXPECT_THROW(psnr(testing::random_cube(3, 3, rng), testing::random_cube(3, 4, rng)), ShapeError);
  EXPECT_THROW(psnr(testing::random_cube(3, 3, rng), testing::random_cube(3, 3, rng), 0.0), DomainError);
}

}  // namespace
}  // namespace hyperfake::recon
