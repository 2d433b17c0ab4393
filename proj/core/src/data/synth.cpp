// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/data/synth.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "hyperfake/data/image_io.hpp"
#include "hyperfake/error.hpp"

namespace hyperfake {
namespace {

constexpr double kRemixStrength = 0.15;
constexpr double kCheckerAmplitude = 0.04;

using Field = std::vector<double>;  // 3×H×W, channel-major

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)};
  return std::mt19937_64(seq);
}

Field smooth_field(Resolution res, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_terms(1, 4);
  std::uniform_real_distribution<double> freq(-2.0, 2.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> amp(0.5, 1.0);
  const std::size_t plane = res.height * res.width;
  Field f(3 * plane, 0.0);
  for (std::size_t c = 0; c < 3; ++c) {
    const int k = n_terms(rng);
    for (int t = 0; t < k; ++t) {
      const double fx = freq(rng), fy = freq(rng), ph = phase(rng), a = amp(rng);
      for (std::size_t y = 0; y < res.height; ++y)
        for (std::size_t x = 0; x < res.width; ++x) {
          const double u = static_cast<double>(x) / res.width;
          const double v = static_cast<double>(y) / res.height;
          f[c * plane + y * res.width + x] +=
              a * std::cos(2.0 * std::numbers::pi * (fx * u + fy * v) + ph);
        }
    }
    double lo = f[c * plane], hi = lo;
    for (std::size_t i = 0; i < plane; ++i) {
      lo = std::min(lo, f[c * plane + i]);
      hi = std::max(hi, f[c * plane + i]);
    }
    for (std::size_t i = 0; i < plane; ++i) {
      double& v = f[c * plane + i];
      v = hi - lo > 1e-12 ? 0.2 + 0.6 * (v - lo) / (hi - lo) : 0.5;
    }
  }
  return f;
}

void remix_ellipse(Field& f, Resolution res, const std::array<double, 9>& mix,
                   std::mt19937_64& rng) {
  std::uniform_real_distribution<double> coverage(0.25, 0.5);
  std::uniform_real_distribution<double> aspect(0.7, 1.4);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::uniform_real_distribution<double> centre(0.4, 0.6);
  const double area = coverage(rng) * static_cast<double>(res.height * res.width);
  const double r = aspect(rng);
  const double a = std::sqrt(area * r / std::numbers::pi);
  const double b = std::sqrt(area / (r * std::numbers::pi));
  const double theta = angle(rng);
  const double cx = centre(rng) * res.width, cy = centre(rng) * res.height;
  const double ct = std::cos(theta), st = std::sin(theta);
  const std::size_t plane = res.height * res.width;
  for (std::size_t y = 0; y < res.height; ++y)
    for (std::size_t x = 0; x < res.width; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      const double u = (dx * ct + dy * st) / a, v = (-dx * st + dy * ct) / b;
      if (u * u + v * v > 1.0) continue;
      const std::size_t i = y * res.width + x;
      const double px[3] = {f[i], f[plane + i], f[2 * plane + i]};
      for (std::size_t c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (std::size_t k = 0; k < 3; ++k) acc += mix[c * 3 + k] * px[k];
        const double checker = ((x + y) % 2 == 0 ? 1.0 : -1.0) * kCheckerAmplitude;
        f[c * plane + i] = std::clamp(acc + checker, 0.0, 1.0);
      }
    }
}

std::vector<std::uint8_t> quantize(const Field& f, Resolution res) {
  const std::size_t plane = res.height * res.width;
  std::vector<std::uint8_t> out(3 * plane);
  for (std::size_t i = 0; i < plane; ++i)
    for (std::size_t c = 0; c < 3; ++c) {
      out[i * 3 + c] = static_cast<std::uint8_t>(std::lround(f[c * plane + i] * 255.0));
    }
  return out;
}

}  // namespace

DatasetManifest synth_dataset(const SynthOptions& options, const std::filesystem::path& out_dir) {
  if (options.n_per_class < 2) throw ValidationError("synth: n_per_class must be at least 2");
  if (options.resolution.height < 16 || options.resolution.width < 16) {
    throw ValidationError("synth: resolution must be at least 16×16");
  }
  const auto frames_dir = out_dir / "frames";
  try {
    std::filesystem::create_directories(frames_dir);
  } catch (const std::filesystem::filesystem_error& e) {
    throw IoError("synth: cannot create " + frames_dir.string() + ": " + e.what());
  }

  // The remix matrix is shared by every fake frame of the dataset.
  auto mix_rng = stream(options.seed, 0x5EED, 0);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::array<double, 9> mix{};
  for (std::size_t i = 0; i < 9; ++i) {
    mix[i] = (i % 4 == 0 ? 1.0 : 0.0) + kRemixStrength * unit(mix_rng);
  }

  std::vector<SampleRecord> records;
  for (int label = 0; label < 2; ++label) {
    for (int k = 0; k < options.n_per_class; ++k) {
      auto rng = stream(options.seed, static_cast<std::uint64_t>(label) + 1,
                        static_cast<std::uint64_t>(k));
      Field f = smooth_field(options.resolution, rng);
      if (label == 1) remix_ellipse(f, options.resolution, mix, rng);

      char name[32];
      std::snprintf(name, sizeof name, "%s_%04d", label ? "fake" : "real", k);
      const std::string rel = std::string("frames/") + name + ".png";
      write_png_rgb8(out_dir / rel, options.resolution.height, options.resolution.width,
                     quantize(f, options.resolution));
      records.push_back(SampleRecord{rel, label, Split::kTrain, name, 0});
    }
  }

  DatasetManifest manifest;
  manifest.records = split_dataset(std::move(records),
                                   {options.train_fraction, 1.0 - options.train_fraction},
                                   options.seed);
  manifest.seed = options.seed;
  manifest.resolution = options.resolution;
  manifest.base_dir = out_dir;
  write_manifest(manifest, out_dir / "manifest.jsonl");
  return manifest;
}

}  // namespace hyperfake
