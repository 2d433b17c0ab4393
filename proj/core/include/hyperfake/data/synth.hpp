// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>

#include "hyperfake/data/manifest.hpp"

namespace hyperfake {

struct SynthOptions {
  int n_per_class = 16;
  Resolution resolution;
  std::uint64_t seed = 0;
  double train_fraction = 0.7;
};

// Writes 2·n_per_class PNG frames under out_dir/frames and the manifest at
// out_dir/manifest.jsonl, one synthetic video per frame.
//
// Real frames are smooth colour fields: each channel is a sum of one to four
// random low-frequency 2-D cosines, min-max rescaled to [0.2, 0.8]. Fake
// frames are built the same way and then, inside a random ellipse covering
// 25-50% of the frame, have their pixels remixed by (I + 0.15·P) and overlaid
// with a ±0.04 period-2 checkerboard (the upsampling artifact of generative
// decoders). P is a single 3×3 matrix drawn once per dataset seed.
DatasetManifest synth_dataset(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace hyperfake
