// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include <random>

#include <benchmark/benchmark.h>

#include "hyperfake/eval/metrics.hpp"
#include "hyperfake/recon/model.hpp"
#include "hyperfake/spectral/attention.hpp"
#include "hyperfake/training/detector.hpp"

namespace hf = hyperfake;

namespace {

hf::RGBFrame noise_frame(std::size_t side, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> px(3 * side * side);
  for (float& v : px) v = u(rng);
  return hf::RGBFrame(side, side, std::move(px));
}

void BM_Reconstruct(benchmark::State& state) {
  const std::size_t side = static_cast<std::size_t>(state.range(0));
  hf::recon::ReconConfig c;
  c.resolution = {side, side};
  const hf::recon::ReconstructionModel model = hf::recon::freeze(hf::recon::ReconstructionModel(c, 1));
  const hf::RGBFrame frame = noise_frame(side, 2);
  for (auto _ : state) benchmark::DoNotOptimize(hf::recon::reconstruct(frame, model));
}
BENCHMARK(BM_Reconstruct)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_DetectorLogit(benchmark::State& state) {
  const std::size_t side = static_cast<std::size_t>(state.range(0));
  hf::recon::ReconConfig rc;
  rc.resolution = {side, side};
  const hf::recon::ReconstructionModel recon(rc, 1);
  const hf::HSICube cube = hf::recon::reconstruct(noise_frame(side, 3), recon);
  hf::training::DetectorConfig dc;
  dc.classifier.input_resolution = {side, side};
  const hf::training::DetectorModel model(dc, 4);
  for (auto _ : state) benchmark::DoNotOptimize(model.logit(cube).value);
}
BENCHMARK(BM_DetectorLogit)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_BandMixing(benchmark::State& state) {
  hf::recon::ReconConfig rc;
  rc.resolution = {64, 64};
  const hf::HSICube cube = hf::recon::reconstruct(noise_frame(64, 5), hf::recon::ReconstructionModel(rc, 1));
  hf::training::DetectorConfig dc;
  const hf::training::DetectorModel model(dc, 6);
  for (auto _ : state) benchmark::DoNotOptimize(model.reduce(cube).alpha.value()[0]);
}
BENCHMARK(BM_BandMixing)->Unit(benchmark::kMicrosecond);

void BM_MetricsReport(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  hf::eval::ScoreSet s;
  for (std::size_t i = 0; i < n; ++i) {
    const int y = i % 2;
    s.labels.push_back(y);
    s.scores.push_back(0.3 * y + 0.7 * u(rng));
  }
  for (auto _ : state) benchmark::DoNotOptimize(hf::eval::compute_report(s, 0.5).auc);
  state.SetComplexityN(static_cast<benchmark::IterationCount>(n));
}
BENCHMARK(BM_MetricsReport)->RangeMultiplier(10)->Range(100, 100000)->Complexity();

}  // namespace
BENCHMARK_MAIN();
