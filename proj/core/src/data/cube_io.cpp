// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/data/cube_io.hpp"

#include "../binary_io.hpp"
#include "hyperfake/error.hpp"

namespace hyperfake {

namespace {
constexpr std::string_view kCubeMagic = "HSC1";
}

std::string encode_cube(const HSICube& cube) {
  std::string out(kCubeMagic);
  detail::put_u32(out, static_cast<std::uint32_t>(kSpectralBands));
  detail::put_u32(out, static_cast<std::uint32_t>(cube.height()));
  detail::put_u32(out, static_cast<std::uint32_t>(cube.width()));
  out.reserve(out.size() + 4 * cube.values().size());
  for (float v : cube.values()) detail::put_f32(out, v);
  return out;
}

HSICube decode_cube(std::string_view bytes, const std::string& origin) {
  detail::Reader<FormatError> r(bytes, origin);
  if (r.take(4) != kCubeMagic) throw FormatError(origin + ": bad magic, not an HSC1 cube");
  const std::uint32_t c = r.u32(), h = r.u32(), w = r.u32();
  if (c != kSpectralBands) {
    throw FormatError(origin + ": expected 31 bands, header claims " + std::to_string(c));
  }
  const std::size_t n = std::size_t(c) * h * w;
  if (r.remaining() != 4 * n) {
    throw FormatError(origin + ": payload holds " + std::to_string(r.remaining()) +
                      " bytes but header dims need " + std::to_string(4 * n));
  }
  std::vector<float> values(n);
  for (auto& v : values) v = r.f32();
  try {
    return HSICube(h, w, std::move(values));
  } catch (const NumericError& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

void write_cube(const HSICube& cube, const std::filesystem::path& path) {
  detail::write_file_atomic(path.string(), encode_cube(cube));
}

HSICube read_cube(const std::filesystem::path& path) {
  return decode_cube(detail::read_file(path.string()), path.string());
}

}  // namespace hyperfake
