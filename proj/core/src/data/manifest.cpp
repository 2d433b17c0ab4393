// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/data/manifest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "../binary_io.hpp"
#include "hyperfake/error.hpp"

namespace hyperfake {

using nlohmann::ordered_json;

std::string_view to_string(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kVal: return "val";
    case Split::kTest: return "test";
  }
  return "train";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "val") return Split::kVal;
  if (text == "test") return Split::kTest;
  return std::nullopt;
}

std::vector<SampleRecord> DatasetManifest::select(Split split) const {
  std::vector<SampleRecord> out;
  for (const auto& r : records) {
    if (r.split == split) out.push_back(r);
  }
  return out;
}

std::map<Split, std::size_t> DatasetManifest::split_counts() const {
  std::map<Split, std::size_t> counts;
  for (const auto& r : records) ++counts[r.split];
  return counts;
}

std::filesystem::path DatasetManifest::resolve(const SampleRecord& record) const {
  std::filesystem::path p(record.frame_path);
  return p.is_absolute() ? p : base_dir / p;
}

void DatasetManifest::require_both_labels(Split split) const {
  bool seen[2] = {false, false};
  for (const auto& r : records) {
    if (r.split == split) seen[r.label] = true;
  }
  if (!seen[0] || !seen[1]) {
    throw ValidationError("split '" + std::string(to_string(split)) +
                          "' must contain at least one real and one fake record");
  }
}

void check_no_leakage(const std::vector<SampleRecord>& records) {
  std::map<std::string, Split> owner;
  for (const auto& r : records) {
    auto [it, inserted] = owner.emplace(r.video_id, r.split);
    if (!inserted && it->second != r.split) {
      throw LeakageError("video '" + r.video_id + "' appears in both '" +
                         std::string(to_string(it->second)) + "' and '" +
                         std::string(to_string(r.split)) + "'");
    }
  }
}

namespace {

const ordered_json& require_field(const ordered_json& obj, const char* name, std::size_t line) {
  auto it = obj.find(name);
  if (it == obj.end()) {
    throw SchemaError("manifest line " + std::to_string(line) + ": missing field '" + name + "'");
  }
  return *it;
}

SampleRecord parse_record(const std::string& text, std::size_t line) {
  ordered_json obj;
  try {
    obj = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("manifest line " + std::to_string(line) + ": invalid JSON: " + e.what());
  }
  if (!obj.is_object()) {
    throw SchemaError("manifest line " + std::to_string(line) + ": expected a JSON object");
  }
  static const std::set<std::string> kFields = {"frame_path", "label", "split", "video_id",
                                                "frame_index"};
  for (const auto& [key, _] : obj.items()) {
    if (!kFields.count(key)) {
      throw SchemaError("manifest line " + std::to_string(line) + ": unknown field '" + key + "'");
    }
  }
  auto type_error = [line](const char* field, const char* want) {
    return SchemaError("manifest line " + std::to_string(line) + ": field '" + field +
                       "' must be " + want);
  };
  SampleRecord r;
  const auto& path = require_field(obj, "frame_path", line);
  if (!path.is_string()) throw type_error("frame_path", "a string");
  r.frame_path = path.get<std::string>();

  const auto& label = require_field(obj, "label", line);
  if (!label.is_number_integer()) throw type_error("label", "an integer");
  const auto lv = label.get<std::int64_t>();
  if (lv != 0 && lv != 1) {
    throw ValidationError("manifest line " + std::to_string(line) + ": label " +
                          std::to_string(lv) + " outside {0, 1}");
  }
  r.label = static_cast<int>(lv);

  const auto& split = require_field(obj, "split", line);
  if (!split.is_string()) throw type_error("split", "a string");
  auto parsed = parse_split(split.get<std::string>());
  if (!parsed) {
    throw ValidationError("manifest line " + std::to_string(line) + ": unknown split '" +
                          split.get<std::string>() + "'");
  }
  r.split = *parsed;

  const auto& video = require_field(obj, "video_id", line);
  if (!video.is_string()) throw type_error("video_id", "a string");
  r.video_id = video.get<std::string>();

  const auto& index = require_field(obj, "frame_index", line);
  if (!index.is_number_integer() || index.get<std::int64_t>() < 0) {
    throw type_error("frame_index", "a nonnegative integer");
  }
  r.frame_index = index.get<std::uint64_t>();
  return r;
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text, const std::filesystem::path& base_dir) {
  DatasetManifest m;
  m.base_dir = base_dir;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    m.records.push_back(parse_record(line, line_no));
  }
  if (m.records.empty()) throw ValidationError("empty manifest");
  check_no_leakage(m.records);
  return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path.string());
  return parse_manifest(text, path.parent_path());
}

std::string format_manifest(const std::vector<SampleRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    ordered_json obj;
    obj["frame_path"] = r.frame_path;
    obj["label"] = r.label;
    obj["split"] = std::string(to_string(r.split));
    obj["video_id"] = r.video_id;
    obj["frame_index"] = r.frame_index;
    out += obj.dump();
    out += '\n';
  }
  return out;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  detail::write_file_atomic(path.string(), format_manifest(manifest.records));
}

std::vector<SampleRecord> split_dataset(std::vector<SampleRecord> records,
                                        std::pair<double, double> fractions,
                                        std::uint64_t seed) {
  const auto [train_frac, val_frac] = fractions;
  if (!(train_frac > 0.0) || !(val_frac > 0.0) ||
      std::abs(train_frac + val_frac - 1.0) > 1e-9) {
    throw ValidationError("split fractions must be positive and sum to 1");
  }
  // video_id → label; a video must not mix labels.
  std::map<std::string, int> video_label;
  for (const auto& r : records) {
    auto [it, inserted] = video_label.emplace(r.video_id, r.label);
    if (!inserted && it->second != r.label) {
      throw ValidationError("video '" + r.video_id + "' carries both labels");
    }
  }
  std::vector<std::string> by_label[2];
  for (const auto& [video, label] : video_label) by_label[label].push_back(video);

  std::mt19937_64 rng(seed);
  std::map<std::string, Split> assignment;
  for (int label = 0; label < 2; ++label) {
    auto& videos = by_label[label];
    if (videos.size() < 2) {
      throw StratificationError("label " + std::to_string(label) + " has " +
                                std::to_string(videos.size()) +
                                " distinct video(s); at least 2 are needed to stratify");
    }
    std::shuffle(videos.begin(), videos.end(), rng);
    const auto n = static_cast<long>(videos.size());
    const long n_train = std::clamp(std::lround(train_frac * static_cast<double>(n)), 1L, n - 1);
    for (long i = 0; i < n; ++i) {
      assignment[videos[static_cast<std::size_t>(i)]] = i < n_train ? Split::kTrain : Split::kVal;
    }
  }
  for (auto& r : records) r.split = assignment.at(r.video_id);
  return records;
}

}  // namespace hyperfake
