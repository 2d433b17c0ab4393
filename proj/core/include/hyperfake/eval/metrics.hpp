// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0
//
// Verification metrics. Positive class is "fake" (label 1); a score at or
// above the threshold is a positive decision, so FAR counts real frames
// accepted as fake and FRR counts fake frames rejected as real.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "hyperfake/data/manifest.hpp"
#include "hyperfake/recon/model.hpp"

namespace hyperfake::eval {

struct ScoreSet {
  std::vector<double> scores;
  std::vector<int> labels;

  // Equal lengths, finite scores, labels in {0,1}.
  void validate() const;
  // Additionally at least one label of each class (MetricError otherwise).
  void require_both_classes() const;
};

struct Counts {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  friend bool operator==(const Counts&, const Counts&) = default;
};

Counts confusion(const ScoreSet& s, double threshold);
double accuracy(const ScoreSet& s, double threshold);

struct RocPoint {
  double fpr, tpr, threshold;
  friend bool operator==(const RocPoint&, const RocPoint&) = default;
};

// Thresholds: one above the maximum score, every distinct score descending,
// one below the minimum. Consecutive duplicate (fpr, tpr) points keep the
// first (highest) threshold. Starts at (0,0), ends at (1,1).
std::vector<RocPoint> roc_curve(const ScoreSet& s);

// Trapezoidal area; ContractError unless fpr and tpr are non-decreasing.
double auc(const std::vector<RocPoint>& roc);
// P(score_pos > score_neg) + ½·P(tie) via average ranks.
double auc_mann_whitney(const ScoreSet& s);

struct EerResult {
  double eer;
  double threshold;
};

// Candidate thresholds are those of roc_curve. If some candidate makes FAR
// equal FRR, the best such one is returned (ties: smaller error, then
// smaller threshold). Otherwise FAR − FRR changes sign between two adjacent
// candidates and both rates are interpolated linearly to their crossing.
EerResult eer(const ScoreSet& s);

struct MetricsReport {
  std::string split;
  std::size_t n = 0;
  double threshold = 0.5;
  double accuracy = 0.0;
  double auc = 0.0;
  double eer = 0.0;
  double eer_threshold = 0.0;
  Counts counts;
  std::vector<RocPoint> roc;
  std::string checkpoint_hash, recon_hash;
  std::uint64_t seed = 0;

  nlohmann::ordered_json to_json() const;
};

MetricsReport compute_report(const ScoreSet& s, double threshold);

struct EvaluateOptions {
  double threshold = 0.5;
  std::optional<std::filesystem::path> report_path;
  std::optional<std::filesystem::path> cache_dir;
};

// Scores every record of `split` (sigmoid probabilities), in a fixed order
// so the report does not depend on manifest order. IntegrityError when the
// checkpoint was trained against different reconstruction weights.
MetricsReport evaluate(const std::filesystem::path& checkpoint, const DatasetManifest& manifest,
                       Split split, const recon::ReconstructionModel& recon,
                       const EvaluateOptions& options = {});

}  // namespace hyperfake::eval
