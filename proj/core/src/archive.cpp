// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/archive.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "binary_io.hpp"
#include "hyperfake/error.hpp"
#include "hyperfake/hash.hpp"

namespace hyperfake {
namespace detail {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, std::string_view bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move " + tmp + " to " + path + ": " + ec.message());
}

}  // namespace detail

namespace {

constexpr std::string_view kMagic = "HFAR";

void put_arrays(std::string& out, const std::map<std::string, Tensor>& arrays) {
  detail::put_u32(out, static_cast<std::uint32_t>(arrays.size()));
  for (const auto& [name, t] : arrays) {
    detail::put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    detail::put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) detail::put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.data()) detail::put_f32(out, static_cast<float>(v));
  }
}

}  // namespace

std::string Archive::arrays_hash() const {
  std::string bytes;
  put_arrays(bytes, arrays);
  return sha256_hex(bytes);
}

void write_archive(const Archive& archive, const std::filesystem::path& path) {
  std::string out(kMagic);
  detail::put_u32(out, Archive::kVersion);
  const std::string header = archive.header.dump();
  detail::put_u64(out, header.size());
  out += header;
  put_arrays(out, archive.arrays);
  detail::write_file_atomic(path.string(), out);
}

Archive read_archive(const std::filesystem::path& path) {
  std::string bytes;
  try {
    bytes = detail::read_file(path.string());
  } catch (const IoError& e) {
    throw CheckpointError(e.what());
  }
  detail::Reader<CheckpointError> r(bytes, path.string());
  if (r.take(4) != kMagic) throw CheckpointError(path.string() + ": bad magic, not an HFAR archive");
  const std::uint32_t version = r.u32();
  if (version != Archive::kVersion) {
    throw CheckpointError(path.string() + ": archive version " + std::to_string(version) +
                          " unsupported (expected " + std::to_string(Archive::kVersion) + ")");
  }
  Archive a;
  const std::uint64_t header_len = r.u64();
  try {
    a.header = nlohmann::ordered_json::parse(r.take(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(path.string() + ": malformed header: " + e.what());
  }
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name(r.take(r.u32()));
    const std::uint32_t rank = r.u32();
    if (rank > 8) throw CheckpointError(path.string() + ": implausible rank for " + name);
    Shape shape(rank);
    for (auto& d : shape) d = r.u32();
    const std::size_t n = numel(shape);
    if (n * 4 > r.remaining()) throw CheckpointError(path.string() + ": truncated file");
    std::vector<double> values(n);
    for (auto& v : values) v = r.f32();
    a.arrays.emplace(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  if (r.remaining() != 0) throw CheckpointError(path.string() + ": trailing bytes");
  return a;
}

}  // namespace hyperfake
