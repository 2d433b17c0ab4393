// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace hyperfake::cli {

// Collects what one artifact-producing command read and wrote, and emits it
// as run_manifest.json. The manifest carries wall-clock duration, so it is
// the one output that differs between otherwise identical runs.
class RunRecorder {
 public:
  RunRecorder(std::string command, std::vector<std::string> args);

  nlohmann::ordered_json& config() { return config_; }
  nlohmann::ordered_json& extra() { return extra_; }
  void seed(const std::string& name, std::uint64_t value) { seeds_[name] = value; }
  void input(const std::filesystem::path& path);
  void output(const std::filesystem::path& path);

  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::vector<std::string> args_;
  nlohmann::ordered_json config_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json seeds_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json inputs_ = nlohmann::ordered_json::object();
  nlohmann::ordered_json extra_ = nlohmann::ordered_json::object();
  std::vector<std::string> outputs_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace hyperfake::cli
