// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <array>
#include <cmath>
#include <random>

#include "generators.hpp"
#include "gradcheck.hpp"
#include "hyperfake/classifier/classifier.hpp"
#include "hyperfake/error.hpp"
#include "hyperfake/param_store.hpp"

namespace hyperfake::classifier {
namespace {

using ag::Var;
using testing::gradcheck;
using testing::random_tensor;

ClassifierConfig config(Backbone b, Resolution r) {
  ClassifierConfig c;
  c.backbone = b;
  c.input_resolution = r;
  return c;
}

RecalibParams recalib(std::size_t channels, std::size_t reduction, ParamStore& store, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return make_recalib(channels, reduction, store, "r.", rng);
}

TEST(Recalibrate, ZeroWeightsHalveInput) {
  ParamStore store;
  RecalibParams p = recalib(3, 1, store, 1);
  for (Var* v : {&p.w1, &p.b1, &p.w2, &p.b2}) v->mutable_value().fill(0.0);
  std::mt19937_64 rng(2);
  const Tensor x = random_tensor({3, 8, 8}, rng);
  Tensor gates;
  const Tensor y = recalibrate(Var(x), p, &gates).value();
  for (double g : gates.values()) EXPECT_EQ(g, 0.5);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_EQ(y[i], x[i] / 2);
}

TEST(Recalibrate, SaturatedGatePassesChannel) {
  ParamStore store;
  RecalibParams p = recalib(3, 1, store, 3);
  p.w2.mutable_value().fill(0.0);
  p.b2.mutable_value()[1] = 1000.0;
  std::mt19937_64 rng(4);
  const Tensor x = random_tensor({3, 4, 4}, rng);
  const Tensor y = recalibrate(Var(x), p).value();
  for (std::size_t i = 16; i < 32; ++i) EXPECT_EQ(y[i], x[i]);
}

TEST(Recalibrate, GatesStrictlyInsideUnitInterval) {
  ParamStore store;
  const RecalibParams p = recalib(16, 4, store, 5);
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    Tensor gates;
    recalibrate(Var(random_tensor({2, 16, 3, 3}, rng, -5, 5)), p, &gates);
    ASSERT_EQ(gates.shape(), (Shape{2, 16}));
    for (double g : gates.values()) {
      EXPECT_GT(g, 0.0);
      EXPECT_LT(g, 1.0);
    }
  }
}

TEST(Recalibrate, GradientMatchesFiniteDifferences) {
  ParamStore store;
  const RecalibParams p = recalib(3, 1, store, 7);
  std::mt19937_64 rng(8);
  Var x(random_tensor({3, 8, 8}, rng), true);
  const Var probe(random_tensor({3, 8, 8}, rng));
  const auto r = gradcheck([&] { return ag::sum(ag::mul(recalibrate(x, p), probe)); }, {x, p.w1, p.b1, p.w2, p.b2});
  EXPECT_LT(r.max_rel_error, 1e-4) << r.worst;
}

TEST(Recalibrate, NonFiniteIsNumericError) {
  ParamStore store;
  const RecalibParams p = recalib(3, 1, store, 9);
  Tensor x({3, 2, 2}, 0.0);
  x[1] = INFINITY;
  EXPECT_THROW(recalibrate(Var(x), p), NumericError);
}

TEST(Classify, CompactGivesFiniteScalar) {
  ParamStore store;
  std::mt19937_64 rng(10);
  const Classifier model(config(Backbone::kCompact, {64, 64}), store, "c.", rng);
  const Logit z = classify(Var(random_tensor({3, 64, 64}, rng, 0, 1)), model);
  EXPECT_TRUE(std::isfinite(z.value));
  const std::vector<Shape> shapes = model.stage_shapes();
  const std::vector<Shape> expected = {{16, 32, 32}, {32, 16, 16}, {64, 8, 8}, {128, 4, 4}};
  ASSERT_GE(shapes.size(), expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) EXPECT_EQ(shapes[i], expected[i]) << i;
}

TEST(Classify, EffnetStageShapes) {
  ParamStore store;
  std::mt19937_64 rng(11);
  const Classifier model(config(Backbone::kEffnetB0Shape, {64, 64}), store, "c.", rng);
  const std::vector<Shape> expected = {{32, 32, 32}, {16, 32, 32}, {24, 16, 16}, {40, 8, 8},  {80, 4, 4},
                                       {112, 4, 4},  {192, 2, 2},  {320, 2, 2},  {1280, 2, 2}};
  EXPECT_EQ(model.stage_shapes(), expected);
  EXPECT_TRUE(std::isfinite(classify(Var(random_tensor({3, 64, 64}, rng, 0, 1)), model).value));
}

TEST(Classify, ZeroHeadGivesZeroLogit) {
  ParamStore store;
  std::mt19937_64 rng(12);
  Classifier model(config(Backbone::kCompact, {32, 32}), store, "c.", rng);
  model.zero_head();
  for (int trial = 0; trial < 3; ++trial) {
    EXPECT_EQ(classify(Var(random_tensor({3, 32, 32}, rng, 0, 1)), model).value, 0.0);
  }
}

TEST(Classify, Deterministic) {
  ParamStore store;
  std::mt19937_64 rng(13);
  const Classifier model(config(Backbone::kCompact, {32, 32}), store, "c.", rng);
  const Var x(random_tensor({3, 32, 32}, rng, 0, 1));
  EXPECT_EQ(classify(x, model).value, classify(x, model).value);
}

TEST(Classify, ShapeMismatch) {
  ParamStore store;
  std::mt19937_64 rng(14);
  const Classifier model(config(Backbone::kCompact, {32, 32}), store, "c.", rng);
  EXPECT_THROW(classify(Var(Tensor({3, 16, 16})), model), ShapeError);
  EXPECT_THROW(classify(Var(Tensor({4, 32, 32})), model), ShapeError);
}

TEST(Classify, EvalModeGradient) {
  ParamStore store;
  std::mt19937_64 rng(15);
  const Classifier model(config(Backbone::kCompact, {16, 16}), store, "c.", rng);
  Var x(random_tensor({3, 16, 16}, rng, 0, 1), true);
  std::vector<Var> leaves = {x};
  for (const auto& [name, p] : store.items()) leaves.push_back(p);
  const auto g = gradcheck(
      [&] { return ag::sum(model.forward_eval(ag::reshape(x, {1, 3, 16, 16}))); }, leaves, 1e-5, 12);
  EXPECT_LT(g.max_rel_error, 1e-3) << g.worst;
}

TEST(Classify, TrainingModeUpdatesRunningStats) {
  ParamStore store;
  std::mt19937_64 rng(16);
  Classifier model(config(Backbone::kCompact, {16, 16}), store, "c.", rng);
  const auto before = model.buffers();
  const Var batch(random_tensor({4, 3, 16, 16}, rng, 0, 1));
  const Tensor eval_before = model.forward_eval(batch).value();
  model.forward(batch, true);
  const auto after = model.buffers();
  bool changed = false;
  for (const auto& [k, v] : before) changed |= !bit_equal(v, after.at(k));
  EXPECT_TRUE(changed);
  // Eval mode reads but never writes the statistics.
  model.forward(batch, false);
  for (const auto& [k, v] : after) EXPECT_TRUE(bit_equal(v, model.buffers().at(k)));
  EXPECT_FALSE(bit_equal(eval_before, model.forward_eval(batch).value()));
}

TEST(Config, ReductionBounds) {
  ClassifierConfig c;
  c.recalib_reduction = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.recalib_reduction = stem_width(Backbone::kCompact) + 1;
  EXPECT_THROW(c.validate(), ConfigError);
  c.recalib_reduction = stem_width(Backbone::kCompact);
  EXPECT_NO_THROW(c.validate());
  EXPECT_EQ(parse_backbone("effnet_b0_shape"), Backbone::kEffnetB0Shape);
  EXPECT_THROW(parse_backbone("resnet"), ConfigError);
  EXPECT_EQ(ClassifierConfig::from_json(c.to_json()), c);
}

// Literal per-sample loss with the sigmoid clamped away from 0 and 1.
double naive_bce(double z, int y) {
  const double p = std::clamp(1.0 / (1.0 + std::exp(-z)), 1e-300, 1.0 - 1e-16);
  return -(y * std::log(p) + (1 - y) * std::log(1.0 - p));
}

TEST(Loss, AnalyticValues) {
  const std::array<int, 1> one = {1};
  EXPECT_NEAR(bce_with_logits(std::array<double, 1>{0.0}, one), std::log(2.0), 1e-12);
  const double big = bce_with_logits(std::array<double, 1>{10000.0}, one);
  EXPECT_TRUE(std::isfinite(big));
  EXPECT_NEAR(big, 0.0, 1e-12);
  const double neg = bce_with_logits(std::array<double, 1>{-10000.0}, one);
  EXPECT_NEAR(neg, 10000.0, 1e-9);
  for (double z : {1e6, -1e6}) EXPECT_TRUE(std::isfinite(bce_with_logits(std::array<double, 1>{z}, one)));
}

TEST(Loss, MatchesNaiveFormula) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(-8, 8);
  for (int i = 0; i < 50; ++i) {
    const double z = u(rng);
    const int y = static_cast<int>(rng() % 2);
    EXPECT_NEAR(bce_with_logits(std::array<double, 1>{z}, std::array<int, 1>{y}), naive_bce(z, y), 1e-9);
  }
}

TEST(Loss, FlipSymmetryIsExact) {
  std::mt19937_64 rng(18);
  std::uniform_real_distribution<double> u(-30, 30);
  for (int i = 0; i < 200; ++i) {
    const double z = u(rng);
    const int y = static_cast<int>(rng() % 2);
    EXPECT_EQ(bce_with_logits(std::array<double, 1>{z}, std::array<int, 1>{y}),
              bce_with_logits(std::array<double, 1>{-z}, std::array<int, 1>{1 - y}));
  }
}

TEST(Loss, Errors) {
  EXPECT_THROW(bce_with_logits(std::span<const double>{}, std::span<const int>{}), DomainError);
  EXPECT_THROW(bce_with_logits(std::array<double, 1>{0.0}, std::array<int, 1>{2}), ValidationError);
}

TEST(Predict, Examples) {
  const Prediction zero = predict(Logit(0.0));
  EXPECT_EQ(zero.probability, 0.5);
  EXPECT_EQ(zero.label, 1);
  const Prediction high = predict(Logit(1e4));
  EXPECT_NEAR(high.probability, 1.0, 1e-12);
  EXPECT_EQ(high.label, 1);
  const Prediction low = predict(Logit(-3.0));
  EXPECT_NEAR(low.probability, 1.0 / (1.0 + std::exp(3.0)), 1e-15);
  EXPECT_NEAR(low.probability, 0.04743, 1e-5);
  EXPECT_EQ(low.label, 0);
  EXPECT_THROW(predict(Logit(0.0), 1.0), DomainError);
  EXPECT_THROW(Logit(NAN), NumericError);
}

}  // namespace
}  // namespace hyperfake::classifier
