// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <tuple>

#include "../binary_io.hpp"
#include "hyperfake/classifier/classifier.hpp"
#include "hyperfake/error.hpp"
#include "hyperfake/hash.hpp"
#include "hyperfake/training/trainer.hpp"

namespace hyperfake::eval {

void ScoreSet::validate() const {
  if (scores.size() != labels.size()) {
    throw ValidationError("score set: " + std::to_string(scores.size()) + " scores but " +
                          std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NumericError("score set: non-finite score at " + std::to_string(i));
    if (labels[i] != 0 && labels[i] != 1) {
      throw ValidationError("score set: label " + std::to_string(labels[i]) + " at " +
                            std::to_string(i) + " is not 0 or 1");
    }
  }
}

void ScoreSet::require_both_classes() const {
  validate();
  const auto pos = std::count(labels.begin(), labels.end(), 1);
  if (pos == 0 || pos == static_cast<std::ptrdiff_t>(labels.size())) {
    throw MetricError("score set needs at least one positive and one negative label");
  }
}

Counts confusion(const ScoreSet& s, double threshold) {
  s.validate();
  Counts c;
  for (std::size_t i = 0; i < s.scores.size(); ++i) {
    const bool positive = s.scores[i] >= threshold;
    if (s.labels[i] == 1) (positive ? c.tp : c.fn)++;
    else (positive ? c.fp : c.tn)++;
  }
  return c;
}

double accuracy(const ScoreSet& s, double threshold) {
  if (s.scores.empty()) throw DomainError("accuracy of an empty score set");
  const Counts c = confusion(s, threshold);
  return static_cast<double>(c.tp + c.tn) / static_cast<double>(s.scores.size());
}

namespace {

struct SweepPoint {
  double threshold;
  std::size_t tp, fp;
};

// Every candidate threshold, descending, with the counts it produces.
std::vector<SweepPoint> sweep(const ScoreSet& s) {
  s.require_both_classes();
  std::vector<std::size_t> idx(s.scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] > s.scores[b]; });
  const double hi = std::nextafter(s.scores[idx.front()], std::numeric_limits<double>::infinity());
  const double lo = std::nextafter(s.scores[idx.back()], -std::numeric_limits<double>::infinity());
  std::vector<SweepPoint> out{{hi, 0, 0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < idx.size();) {
    const double v = s.scores[idx[i]];
    for (; i < idx.size() && s.scores[idx[i]] == v; ++i) (s.labels[idx[i]] == 1 ? tp : fp)++;
    out.push_back({v, tp, fp});
  }
  out.push_back({lo, tp, fp});
  return out;
}

}  // namespace

std::vector<RocPoint> roc_curve(const ScoreSet& s) {
  const std::vector<SweepPoint> pts = sweep(s);
  const double npos = static_cast<double>(pts.back().tp);
  const double nneg = static_cast<double>(pts.back().fp);
  std::vector<RocPoint> roc;
  for (const SweepPoint& p : pts) {
    const RocPoint r{static_cast<double>(p.fp) / nneg, static_cast<double>(p.tp) / npos, p.threshold};
    if (!roc.empty() && roc.back().fpr == r.fpr && roc.back().tpr == r.tpr) continue;
    roc.push_back(r);
  }
  return roc;
}

double auc(const std::vector<RocPoint>& roc) {
  if (roc.size() < 2) throw ContractError("auc: ROC needs at least two points");
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    if (roc[i].fpr < roc[i - 1].fpr || roc[i].tpr < roc[i - 1].tpr) {
      throw ContractError("auc: ROC points are not sorted by fpr then tpr");
    }
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) * 0.5;
  }
  return area;
}

double auc_mann_whitney(const ScoreSet& s) {
  s.require_both_classes();
  const std::size_t n = s.scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return s.scores[a] < s.scores[b]; });
  double rank_sum = 0.0;
  std::size_t npos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && s.scores[idx[j]] == s.scores[idx[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks i+1 .. j
    for (std::size_t k = i; k < j; ++k) {
      if (s.labels[idx[k]] == 1) {
        rank_sum += avg_rank;
        ++npos;
      }
    }
    i = j;
  }
  const double p = static_cast<double>(npos);
  const double q = static_cast<double>(n - npos);
  return (rank_sum - p * (p + 1.0) * 0.5) / (p * q);
}

EerResult eer(const ScoreSet& s) {
  const std::vector<SweepPoint> pts = sweep(s);
  const std::size_t npos = pts.back().tp, nneg = pts.back().fp;
  auto far = [&](const SweepPoint& p) { return static_cast<double>(p.fp) / static_cast<double>(nneg); };
  auto frr = [&](const SweepPoint& p) {
    return static_cast<double>(npos - p.tp) / static_cast<double>(npos);
  };
  // sign of FAR − FRR, decided in integers: fp/nneg vs fn/npos.
  auto sign = [&](const SweepPoint& p) {
    const std::size_t lhs = p.fp * npos, rhs = (npos - p.tp) * nneg;
    return lhs == rhs ? 0 : (lhs > rhs ? 1 : -1);
  };

  std::optional<EerResult> best;
  for (const SweepPoint& p : pts) {
    if (sign(p) != 0) continue;
    const EerResult cand{0.5 * (far(p) + frr(p)), p.threshold};
    if (!best || std::tie(cand.eer, cand.threshold) < std::tie(best->eer, best->threshold)) best = cand;
  }
  if (best) return *best;

  // Thresholds descend, so FAR − FRR rises from −1 to +1 and crosses zero once.
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (sign(pts[i]) < 0 && sign(pts[i + 1]) > 0) {
      const double d0 = far(pts[i]) - frr(pts[i]);
      const double d1 = far(pts[i + 1]) - frr(pts[i + 1]);
      const double t = -d0 / (d1 - d0);
      const double a = far(pts[i]) + t * (far(pts[i + 1]) - far(pts[i]));
      const double b = frr(pts[i]) + t * (frr(pts[i + 1]) - frr(pts[i]));
      return {0.5 * (a + b), pts[i].threshold + t * (pts[i + 1].threshold - pts[i].threshold)};
    }
  }
  throw ContractError("eer: FAR − FRR never changes sign");
}

nlohmann::ordered_json MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["positive_class"] = "fake";
  j["score"] = "sigmoid_probability";
  j["split"] = split;
  j["n"] = n;
  j["threshold"] = threshold;
  j["accuracy"] = accuracy;
  j["auc"] = auc;
  j["eer"] = eer;
  j["eer_threshold"] = eer_threshold;
  j["counts"] = {{"tp", counts.tp}, {"fp", counts.fp}, {"tn", counts.tn}, {"fn", counts.fn}};
  nlohmann::ordered_json pts = nlohmann::ordered_json::array();
  for (const RocPoint& p : roc) pts.push_back({{"fpr", p.fpr}, {"tpr", p.tpr}, {"threshold", p.threshold}});
  j["roc"] = std::move(pts);
  j["provenance"] = {{"checkpoint_hash", checkpoint_hash}, {"recon_hash", recon_hash}, {"seed", seed}};
  return j;
}

MetricsReport compute_report(const ScoreSet& s, double threshold) {
  s.require_both_classes();
  MetricsReport r;
  r.n = s.scores.size();
  r.threshold = threshold;
  r.counts = confusion(s, threshold);
  r.accuracy = accuracy(s, threshold);
  r.roc = roc_curve(s);
  r.auc = auc(r.roc);
  const EerResult e = eer(s);
  r.eer = e.eer;
  r.eer_threshold = e.threshold;
  return r;
}

MetricsReport evaluate(const std::filesystem::path& checkpoint, const DatasetManifest& manifest,
                       Split split, const recon::ReconstructionModel& recon,
                       const EvaluateOptions& options) {
  const training::TrainState state = training::load_checkpoint(checkpoint);
  const std::string recon_hash = recon.weights_hash();
  if (state.recon_weights_hash != recon_hash) {
    throw IntegrityError("provenance mismatch: checkpoint expects reconstruction weights " +
                         state.recon_weights_hash + ", got " + recon_hash);
  }
  const training::DetectorModel model = training::restore_model(state);

  std::vector<SampleRecord> records = manifest.select(split);
  if (records.empty()) throw DomainError("evaluate: split " + std::string(to_string(split)) + " is empty");
  std::sort(records.begin(), records.end(), [](const SampleRecord& a, const SampleRecord& b) {
    return std::tie(a.video_id, a.frame_index, a.frame_path) <
           std::tie(b.video_id, b.frame_index, b.frame_path);
  });
  training::CubeCache cache(recon, options.cache_dir);
  ScoreSet scores;
  for (const SampleRecord& r : records) {
    const classifier::Logit logit = model.logit(cache.get(manifest, r));
    scores.scores.push_back(classifier::predict(logit, 0.5).probability);
    scores.labels.push_back(r.label);
  }
  MetricsReport report = compute_report(scores, options.threshold);
  report.split = std::string(to_string(split));
  report.checkpoint_hash = sha256_file(checkpoint);
  report.recon_hash = recon_hash;
  report.seed = state.train.seed;
  if (options.report_path) {
    detail::write_file_atomic(options.report_path->string(), report.to_json().dump(2) + "\n");
  }
  return report;
}

}  // namespace hyperfake::eval
