// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "run_manifest.hpp"

#include <fstream>

#include "hyperfake/error.hpp"
#include "hyperfake/hash.hpp"

namespace hyperfake::cli {

RunRecorder::RunRecorder(std::string command, std::vector<std::string> args)
    : command_(std::move(command)), args_(std::move(args)), start_(std::chrono::steady_clock::now()) {}

void RunRecorder::input(const std::filesystem::path& path) {
  inputs_[path.generic_string()] = sha256_file(path);
}

void RunRecorder::output(const std::filesystem::path& path) { outputs_.push_back(path.generic_string()); }

void RunRecorder::write(const std::filesystem::path& path) const {
  nlohmann::ordered_json j;
  j["command"] = command_;
  j["argv"] = args_;
  j["config"] = config_;
  j["seeds"] = seeds_;
  j["inputs"] = inputs_;
  j["outputs"] = outputs_;
  for (const auto& [k, v] : extra_.items()) j[k] = v;
  j["duration_seconds"] =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace hyperfake::cli
