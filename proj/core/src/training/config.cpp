// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <set>
#include <sstream>

#include "hyperfake/error.hpp"
#include "hyperfake/training/trainer.hpp"

namespace hyperfake::training {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T out{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return out;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("train: epochs must be ≥ 1");
  if (batch_size < 1) throw ConfigError("train: batch_size must be ≥ 1");
  if (!(lr_min > 0.0 && lr_min <= lr0)) throw ConfigError("train: need 0 < lr_min ≤ lr0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("train: Adam betas must lie in (0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("train: adam_eps must be positive");
  if (eval_every < 1) throw ConfigError("train: eval_every must be ≥ 1");
}

bool TrainConfig::set(const std::string& key, const std::string& value) {
  if (key == "epochs") epochs = parse_number<std::size_t>(key, value);
  else if (key == "batch_size") batch_size = parse_number<std::size_t>(key, value);
  else if (key == "lr0") lr0 = parse_number<double>(key, value);
  else if (key == "lr_min") lr_min = parse_number<double>(key, value);
  else if (key == "adam_beta1") adam_beta1 = parse_number<double>(key, value);
  else if (key == "adam_beta2") adam_beta2 = parse_number<double>(key, value);
  else if (key == "adam_eps") adam_eps = parse_number<double>(key, value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "eval_every") eval_every = parse_number<std::size_t>(key, value);
  else if (key == "checkpoint_dir") checkpoint_dir = value;
  else return false;
  return true;
}

nlohmann::ordered_json TrainConfig::to_json() const {
  return {{"epochs", epochs},         {"batch_size", batch_size},
          {"lr0", lr0},               {"lr_min", lr_min},
          {"adam_beta1", adam_beta1}, {"adam_beta2", adam_beta2},
          {"adam_eps", adam_eps},     {"seed", seed},
          {"eval_every", eval_every}, {"checkpoint_dir", checkpoint_dir.generic_string()}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  TrainConfig c;
  c.epochs = j.at("epochs").get<std::size_t>();
  c.batch_size = j.at("batch_size").get<std::size_t>();
  c.lr0 = j.at("lr0").get<double>();
  c.lr_min = j.at("lr_min").get<double>();
  c.adam_beta1 = j.at("adam_beta1").get<double>();
  c.adam_beta2 = j.at("adam_beta2").get<double>();
  c.adam_eps = j.at("adam_eps").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.eval_every = j.at("eval_every").get<std::size_t>();
  c.checkpoint_dir = j.at("checkpoint_dir").get<std::string>();
  return c;
}

bool TrainConfig::same_schedule(const TrainConfig& o) const {
  return epochs == o.epochs && batch_size == o.batch_size && lr0 == o.lr0 && lr_min == o.lr_min &&
         adam_beta1 == o.adam_beta1 && adam_beta2 == o.adam_beta2 && adam_eps == o.adam_eps &&
         seed == o.seed;
}

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(n) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError("config line " + std::to_string(n) + ": empty key or value");
    }
    if (!seen.insert(key).second) {
      throw ConfigError("config line " + std::to_string(n) + ": repeated key '" + key + "'");
    }
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

nlohmann::ordered_json HistoryEntry::to_json() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["train_loss"] = train_loss;
  j["train_acc"] = train_acc;
  j["val_acc"] = val_acc ? nlohmann::ordered_json(*val_acc) : nlohmann::ordered_json(nullptr);
  return j;
}

HistoryEntry HistoryEntry::from_json(const nlohmann::json& j) {
  HistoryEntry h;
  h.epoch = j.at("epoch").get<std::size_t>();
  h.train_loss = j.at("train_loss").get<double>();
  h.train_acc = j.at("train_acc").get<double>();
  if (!j.at("val_acc").is_null()) h.val_acc = j.at("val_acc").get<double>();
  return h;
}

nlohmann::ordered_json history_json(const std::vector<HistoryEntry>& history) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const HistoryEntry& h : history) arr.push_back(h.to_json());
  return arr;
}

}  // namespace hyperfake::training
