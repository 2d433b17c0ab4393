// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "svg.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <vector>

#include "hyperfake/error.hpp"

namespace hyperfake::cli {
namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string point(double u, double v) { return num(50.0 + 400.0 * u) + "," + num(450.0 - 400.0 * v); }

void frame(std::ostringstream& s, const std::string& title, const std::string& xlabel,
           const std::string& ylabel) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"500\" height=\"500\" viewBox=\"0 0 500 500\">\n"
    << "<rect x=\"0\" y=\"0\" width=\"500\" height=\"500\" fill=\"white\"/>\n"
    << "<rect x=\"50\" y=\"50\" width=\"400\" height=\"400\" fill=\"none\" stroke=\"black\"/>\n"
    << "<text x=\"250\" y=\"30\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
    << "<text x=\"250\" y=\"485\" text-anchor=\"middle\" font-size=\"14\">" << xlabel << "</text>\n"
    << "<text x=\"15\" y=\"250\" text-anchor=\"middle\" font-size=\"14\" transform=\"rotate(-90 15 250)\">"
    << ylabel << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double t = i / 4.0;
    s << "<text x=\"" << num(50 + 400 * t) << "\" y=\"465\" text-anchor=\"middle\" font-size=\"10\">"
      << num(t) << "</text>\n"
      << "<text x=\"45\" y=\"" << num(454 - 400 * t) << "\" text-anchor=\"end\" font-size=\"10\">"
      << num(t) << "</text>\n";
  }
}

void polyline(std::ostringstream& s, const std::vector<std::pair<double, double>>& pts,
              const std::string& colour, const std::string& id) {
  s << "<polyline id=\"" << id << "\" fill=\"none\" stroke=\"" << colour
    << "\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < pts.size(); ++i) s << (i ? " " : "") << point(pts[i].first, pts[i].second);
  s << "\"/>\n";
}

}  // namespace

std::string roc_svg(const nlohmann::json& report) {
  if (!report.contains("roc") || !report["roc"].is_array() || report["roc"].empty()) {
    throw ValidationError("plot: report has no ROC points");
  }
  std::vector<std::pair<double, double>> pts;
  for (const auto& p : report["roc"]) pts.emplace_back(p.at("fpr").get<double>(), p.at("tpr").get<double>());
  std::ostringstream s;
  std::string title = "ROC";
  if (report.contains("auc")) title += " (AUC " + num(report["auc"].get<double>()) + ")";
  frame(s, title, "false positive rate", "true positive rate");
  s << "<line x1=\"50\" y1=\"450\" x2=\"450\" y2=\"50\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n";
  polyline(s, pts, "#1f77b4", "roc");
  s << "</svg>\n";
  return s.str();
}

std::string history_svg(const nlohmann::json& history) {
  if (!history.is_array() || history.empty()) throw ValidationError("plot: empty training history");
  const double last_epoch = history.back().at("epoch").get<double>();
  double max_loss = 0.0;
  for (const auto& h : history) max_loss = std::max(max_loss, h.at("train_loss").get<double>());
  std::vector<std::pair<double, double>> loss, train_acc, val_acc;
  for (const auto& h : history) {
    const double u = last_epoch > 1 ? (h.at("epoch").get<double>() - 1) / (last_epoch - 1) : 0.0;
    loss.emplace_back(u, max_loss > 0 ? h.at("train_loss").get<double>() / max_loss : 0.0);
    train_acc.emplace_back(u, h.at("train_acc").get<double>());
    if (!h.at("val_acc").is_null()) val_acc.emplace_back(u, h.at("val_acc").get<double>());
  }
  std::ostringstream s;
  frame(s, "Training history (" + num(last_epoch) + " epochs)", "epoch (normalized)",
        "accuracy / loss÷" + num(max_loss));
  polyline(s, loss, "#d62728", "train_loss");
  polyline(s, train_acc, "#1f77b4", "train_acc");
  if (!val_acc.empty()) polyline(s, val_acc, "#2ca02c", "val_acc");
  s << "</svg>\n";
  return s.str();
}

}  // namespace hyperfake::cli
