// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "generators.hpp"
#include "hyperfake/error.hpp"
#include "hyperfake/eval/metrics.hpp"
#include "oracles.hpp"

namespace hyperfake::eval {
namespace {

using testing::auc_pairs;
using testing::eer_sweep;
using testing::random_score_set;

ScoreSet make(std::vector<double> scores, std::vector<int> labels) { return {std::move(scores), std::move(labels)}; }

bool passes_through(const std::vector<RocPoint>& roc, double fpr, double tpr) {
  for (const RocPoint& p : roc) {
    if (p.fpr == fpr && p.tpr == tpr) return true;
  }
  return false;
}

TEST(Accuracy, SeparatedPair) { EXPECT_EQ(accuracy(make({0.9, 0.1}, {1, 0}), 0.5), 1.0); }

TEST(Accuracy, EqualScoresHalfRight) { EXPECT_EQ(accuracy(make({0.9, 0.9}, {1, 0}), 0.5), 0.5); }

TEST(Accuracy, ScoreAtThresholdIsPositive) {
  EXPECT_EQ(confusion(make({0.5}, {1}), 0.5).tp, 1u);
}

TEST(Accuracy, EmptyIsDomainError) { EXPECT_THROW(accuracy(make({}, {}), 0.5), DomainError); }

TEST(Accuracy, MatchesCountingLoop) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    const ScoreSet s = random_score_set(rng, 1, 100);
    const double tau = std::uniform_real_distribution<double>(0, 1)(rng);
    const Counts c = testing::count_decisions(s, tau);
    EXPECT_EQ(confusion(s, tau), c);
    EXPECT_EQ(accuracy(s, tau), static_cast<double>(c.tp + c.tn) / static_cast<double>(s.scores.size()));
  }
}

TEST(Validation, RejectsBadInput) {
  EXPECT_THROW(make({0.1, 0.2}, {1}).validate(), ValidationError);
  EXPECT_THROW(make({0.1}, {2}).validate(), ValidationError);
  EXPECT_THROW(make({NAN}, {1}).validate(), NumericError);
}

TEST(Roc, SeparatedSetCorners) {
  const auto roc = roc_curve(make({0.9, 0.8, 0.3, 0.1}, {1, 1, 0, 0}));
  EXPECT_TRUE(passes_through(roc, 0, 0));
  EXPECT_TRUE(passes_through(roc, 0, 1));
  EXPECT_TRUE(passes_through(roc, 1, 1));
}

TEST(Roc, AllScoresEqual) {
  const auto roc = roc_curve(make({0.4, 0.4, 0.4}, {1, 0, 1}));
  ASSERT_EQ(roc.size(), 2u);
  EXPECT_EQ(roc[0].fpr, 0.0);
  EXPECT_EQ(roc[0].tpr, 0.0);
  EXPECT_EQ(roc[1].fpr, 1.0);
  EXPECT_EQ(roc[1].tpr, 1.0);
}

TEST(Roc, InvertedLabelsPassThroughOneZero) {
  const auto roc = roc_curve(make({0.9, 0.8, 0.3, 0.1}, {0, 0, 1, 1}));
  EXPECT_TRUE(passes_through(roc, 1, 0));
}

TEST(Roc, SingleClassIsMetricError) {
  EXPECT_THROW(roc_curve(make({0.1, 0.2}, {1, 1})), MetricError);
  EXPECT_THROW(eer(make({0.1, 0.2}, {0, 0})), MetricError);
}

TEST(Roc, EndpointsAndMonotone) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto roc = roc_curve(random_score_set(rng));
    EXPECT_EQ(roc.front().fpr, 0.0);
    EXPECT_EQ(roc.front().tpr, 0.0);
    EXPECT_EQ(roc.back().fpr, 1.0);
    EXPECT_EQ(roc.back().tpr, 1.0);
    for (std::size_t i = 1; i < roc.size(); ++i) {
      EXPECT_LE(roc[i - 1].fpr, roc[i].fpr);
      EXPECT_LE(roc[i - 1].tpr, roc[i].tpr);
      EXPECT_GT(roc[i - 1].threshold, roc[i].threshold);
    }
  }
}

TEST(Auc, PerfectSeparationIsOne) { EXPECT_EQ(auc(roc_curve(make({0.9, 0.8, 0.3, 0.1}, {1, 1, 0, 0}))), 1.0); }

TEST(Auc, ThreeOfFourPairsOrdered) {
  const ScoreSet s = make({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0});
  EXPECT_NEAR(auc(roc_curve(s)), 0.75, 1e-12);
  EXPECT_NEAR(auc_mann_whitney(s), 0.75, 1e-12);
}

TEST(Auc, IndependentLabelsNearHalf) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(0, 1);
  ScoreSet s;
  for (int i = 0; i < 10000; ++i) {
    s.scores.push_back(u(rng));
    s.labels.push_back(u(rng) < 0.5 ? 1 : 0);
  }
  EXPECT_NEAR(auc(roc_curve(s)), 0.5, 0.02);
}

TEST(Auc, UnsortedRocIsContractError) {
  std::vector<RocPoint> roc = {{0, 0, 2}, {0.5, 0.5, 1}, {0.2, 1, 0.5}, {1, 1, 0}};
  EXPECT_THROW(auc(roc), ContractError);
}

TEST(Auc, TrapezoidEqualsPairCounting) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 500; ++trial) {
    const ScoreSet s = random_score_set(rng);
    const double oracle = auc_pairs(s);
    EXPECT_NEAR(auc(roc_curve(s)), oracle, 1e-12);
    EXPECT_NEAR(auc_mann_whitney(s), oracle, 1e-12);
  }
}

TEST(Eer, PerfectSeparationIsZero) { EXPECT_EQ(eer(make({0.9, 0.8, 0.3, 0.1}, {1, 1, 0, 0})).eer, 0.0); }

TEST(Eer, CrossingBetweenMiddleScores) {
  const EerResult r = eer(make({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0}));
  EXPECT_NEAR(r.eer, 0.5, 1e-12);
  EXPECT_GT(r.threshold, 0.4);
  EXPECT_LE(r.threshold, 0.6);
}

TEST(Eer, MatchesExhaustiveSweep) {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 500; ++trial) {
    const ScoreSet s = random_score_set(rng);
    const EerResult r = eer(s);
    const auto o = eer_sweep(s);
    ASSERT_NEAR(r.eer, o.eer, 1e-12) << "trial " << trial;
    EXPECT_GE(r.threshold, o.lo);
    EXPECT_LE(r.threshold, o.hi);
  }
}

TEST(Invariance, StrictlyMonotoneTransform) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const ScoreSet s = random_score_set(rng);
    ScoreSet t = s;
    for (double& x : t.scores) x = std::exp(3.0 * x) - 2.0;
    EXPECT_EQ(eer(s).eer, eer(t).eer);
    EXPECT_NEAR(auc(roc_curve(s)), auc(roc_curve(t)), 1e-12);
  }
}

TEST(Report, FieldOrderAndCounts) {
  const MetricsReport r = compute_report(make({0.9, 0.4, 0.6, 0.1}, {1, 1, 0, 0}), 0.5);
  const auto j = r.to_json();
  std::vector<std::string> keys;
  for (const auto& [k, v] : j.items()) keys.push_back(k);
  const std::vector<std::string> expected = {"positive_class", "score", "split", "n", "threshold", "accuracy",
                                             "auc", "eer", "eer_threshold", "counts", "roc", "provenance"};
  EXPECT_EQ(keys, expected);
  EXPECT_EQ(r.counts, (Counts{1, 1, 1, 1}));
  EXPECT_EQ(r.accuracy, 0.5);
  EXPECT_EQ(j["positive_class"], "fake");
}

TEST(Report, ConstantScoresGiveChanceAuc) {
  const MetricsReport r = compute_report(make({0.5, 0.5, 0.5, 0.5, 0.5}, {1, 1, 1, 0, 0}), 0.5);
  EXPECT_EQ(r.auc, 0.5);
  EXPECT_EQ(r.accuracy, 0.6);
}

}  // namespace
}  // namespace hyperfake::eval
