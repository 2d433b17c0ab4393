// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/recon/model.hpp"

#include <cmath>
#include <fstream>

#include "../binary_io.hpp"
#include "hyperfake/archive.hpp"
#include "hyperfake/error.hpp"

namespace hyperfake::recon {

void ReconConfig::validate() const {
  if (n_stages < 1) throw ConfigError("recon: n_stages must be at least 1");
  if (n_heads < 1 || feature_channels % n_heads != 0) {
    throw ConfigError("recon: feature_channels " + std::to_string(feature_channels) +
                      " not divisible by n_heads " + std::to_string(n_heads));
  }
  if (flexi_downsample != 2 && flexi_downsample != 4) {
    throw ConfigError("recon: flexi_downsample must be 2 or 4");
  }
  const std::size_t unit = 2 * flexi_downsample;
  if (resolution.height % unit != 0 || resolution.width % unit != 0 || resolution.height == 0 ||
      resolution.width == 0) {
    throw ConfigError("recon: resolution " + std::to_string(resolution.height) + "×" +
                      std::to_string(resolution.width) + " must be divisible by " +
                      std::to_string(unit));
  }
}

nlohmann::ordered_json ReconConfig::to_json() const {
  nlohmann::ordered_json j;
  j["n_stages"] = n_stages;
  j["feature_channels"] = feature_channels;
  j["n_heads"] = n_heads;
  j["flexi_downsample"] = flexi_downsample;
  j["height"] = resolution.height;
  j["width"] = resolution.width;
  j["out_bands"] = out_bands;
  return j;
}

ReconConfig ReconConfig::from_json(const nlohmann::json& j) {
  try {
    ReconConfig c;
    c.n_stages = j.at("n_stages").get<std::size_t>();
    c.feature_channels = j.at("feature_channels").get<std::size_t>();
    c.n_heads = j.at("n_heads").get<std::size_t>();
    c.flexi_downsample = j.at("flexi_downsample").get<std::size_t>();
    c.resolution.height = j.at("height").get<std::size_t>();
    c.resolution.width = j.at("width").get<std::size_t>();
    if (j.contains("out_bands") && j["out_bands"].get<std::size_t>() != out_bands) {
      throw CheckpointError("recon config: out_bands must be 31");
    }
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("recon config: ") + e.what());
  }
}

namespace {

// Smooth positive response curves centred on red, green and blue bands, so
// a fresh model already maps RGB to plausible spectra through the skip path.
Tensor spectral_skip_init(std::mt19937_64& rng) {
  constexpr double kCentres[3] = {25.0, 15.0, 6.0};
  constexpr double kWidth = 5.0;
  Tensor t = normal_init({kSpectralBands, 3, 1, 1}, 0.02, rng);
  for (std::size_t b = 0; b < kSpectralBands; ++b)
    for (std::size_t c = 0; c < 3; ++c) {
      const double d = (static_cast<double>(b) - kCentres[c]) / kWidth;
      t[b * 3 + c] += std::exp(-0.5 * d * d);
    }
  round_to_float(t);
  return t;
}

}  // namespace

ReconstructionModel::ReconstructionModel(ReconConfig config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  build(seed);
}

SmsaWeights ReconstructionModel::make_smsa(const std::string& prefix, std::size_t width,
                                           std::mt19937_64& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(width));
  SmsaWeights w;
  w.w_q = params_.add(prefix + ".w_q", normal_init({width, width}, sd, rng));
  w.w_k = params_.add(prefix + ".w_k", normal_init({width, width}, sd, rng));
  w.w_v = params_.add(prefix + ".w_v", normal_init({width, width}, sd, rng));
  w.w_o = params_.add(prefix + ".w_o", normal_init({width, width}, sd, rng));
  return w;
}

SabWeights ReconstructionModel::make_sab(const std::string& prefix, std::size_t c,
                                         std::mt19937_64& rng) {
  const double sd = 1.0 / std::sqrt(static_cast<double>(c));
  SabWeights w;
  w.norm1_gamma = params_.add(prefix + ".norm1.gamma", Tensor({c}, 1.0));
  w.norm1_beta = params_.add(prefix + ".norm1.beta", Tensor({c}, 0.0));
  w.w_q = params_.add(prefix + ".attn.w_q", normal_init({c, c}, sd, rng));
  w.w_k = params_.add(prefix + ".attn.w_k", normal_init({c, c}, sd, rng));
  w.w_v = params_.add(prefix + ".attn.w_v", normal_init({c, c}, sd, rng));
  w.w_o = params_.add(prefix + ".attn.w_o", normal_init({c, c}, 0.5 * sd, rng));
  w.norm2_gamma = params_.add(prefix + ".norm2.gamma", Tensor({c}, 1.0));
  w.norm2_beta = params_.add(prefix + ".norm2.beta", Tensor({c}, 0.0));
  w.ffn_w1 = params_.add(prefix + ".ffn.w1", normal_init({2 * c, c, 1, 1}, sd, rng));
  w.ffn_b1 = params_.add(prefix + ".ffn.b1", Tensor({2 * c}, 0.0));
  w.ffn_w2 = params_.add(prefix + ".ffn.w2",
                         normal_init({c, 2 * c, 1, 1}, 0.5 / std::sqrt(2.0 * c), rng));
  w.ffn_b2 = params_.add(prefix + ".ffn.b2", Tensor({c}, 0.0));
  return w;
}

void ReconstructionModel::build(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t f = config_.feature_channels;
  const std::size_t s = config_.flexi_downsample;
  const std::size_t pooled =
      (config_.resolution.height / (2 * s)) * (config_.resolution.width / (2 * s));

  embed_ = params_.add("embed.weight", normal_init({f, 3, 3, 3}, 1.0 / std::sqrt(27.0), rng));
  for (std::size_t i = 0; i < config_.n_stages; ++i) {
    const std::string p = "stages." + std::to_string(i);
    Stage st;
    st.encoder = make_sab(p + ".encoder", f, rng);
    st.down = params_.add(p + ".down.weight",
                          normal_init({2 * f, f, 2, 2}, 1.0 / std::sqrt(4.0 * f), rng));
    st.flexi.factor = s;
    st.flexi.w_in = params_.add(p + ".flexi.w_in",
                                normal_init({pooled, f}, 1.0 / std::sqrt(double(pooled)), rng));
    st.flexi.attn = make_smsa(p + ".flexi.attn", f, rng);
    st.flexi.w_out =
        params_.add(p + ".flexi.w_out", normal_init({f, pooled}, 0.5 / std::sqrt(double(f)), rng));
    st.bottleneck = make_sab(p + ".bottleneck", 2 * f, rng);
    st.up = params_.add(p + ".up.weight",
                        normal_init({f, 2 * f, 1, 1}, 1.0 / std::sqrt(2.0 * f), rng));
    st.fuse = params_.add(p + ".fuse.weight",
                          normal_init({f, 2 * f, 1, 1}, 1.0 / std::sqrt(2.0 * f), rng));
    st.decoder = make_sab(p + ".decoder", f, rng);
    st.out = params_.add(p + ".out.weight",
                         normal_init({f, f, 1, 1}, 0.5 / std::sqrt(double(f)), rng));
    stages_.push_back(std::move(st));
  }
  head_ = params_.add("head.weight",
                      normal_init({kSpectralBands, f, 3, 3}, 0.5 / std::sqrt(9.0 * f), rng));
  skip_ = params_.add("skip.weight", spectral_skip_init(rng));
}

ReconstructionModel ReconstructionModel::clone() const {
  ReconstructionModel copy(config_, 0);
  copy.params_.load(params_.snapshot(), "clone");
  if (frozen_) copy.freeze();
  return copy;
}

void ReconstructionModel::freeze() {
  frozen_ = true;
  params_.set_trainable(false);
}

ag::Var ReconstructionModel::forward(const ag::Var& rgb) const {
  const Shape& in = rgb.shape();
  if (in.size() != 3 || in[0] != 3) throw ShapeError("reconstruct: input must be 3×H×W, got " + to_string(in));
  const std::size_t h = in[1], w = in[2];
  if (h != config_.resolution.height || w != config_.resolution.width) {
    throw ShapeError("reconstruct: model configured for " +
                     std::to_string(config_.resolution.height) + "×" +
                     std::to_string(config_.resolution.width) + ", input is " +
                     std::to_string(h) + "×" + std::to_string(w));
  }
  const std::size_t heads = config_.n_heads;
  const ag::Var x = ag::reshape(rgb, {1, 3, h, w});
  ag::Var feats = ag::conv2d(x, embed_, 1, 1);
  const Tensor up_rows = ag::bilinear_matrix(h / 2, h);
  const Tensor up_cols = ag::bilinear_matrix(w / 2, w);

  for (std::size_t i = 0; i < stages_.size(); ++i) {
    const Stage& st = stages_[i];
    const ag::Var enc = spectral_attention_block(feats, st.encoder, heads);
    ag::Var mid = ag::conv2d(enc, st.down, 2, 0);
    mid = flexi_attention(mid, st.flexi, heads);
    mid = spectral_attention_block(mid, st.bottleneck, heads);
    const ag::Var up = ag::conv2d(ag::spatial_map(mid, up_rows, up_cols), st.up, 1, 0);
    const std::vector<ag::Var> parts{up, enc};
    const ag::Var fused = ag::conv2d(ag::concat(parts, 1), st.fuse, 1, 0);
    const ag::Var dec = spectral_attention_block(fused, st.decoder, heads);
    feats = ag::add(feats, ag::conv2d(dec, st.out, 1, 0));
    if (!feats.value().all_finite()) {
      throw NumericError("reconstruct: non-finite activation after stage " + std::to_string(i));
    }
  }
  const ag::Var cube = ag::add(ag::conv2d(feats, head_, 1, 1), ag::conv2d(x, skip_, 1, 0));
  if (!cube.value().all_finite()) throw NumericError("reconstruct: non-finite output cube");
  return ag::reshape(cube, {kSpectralBands, h, w});
}

std::string ReconstructionModel::weights_hash() const {
  Archive a;
  a.arrays = params_.snapshot();
  return a.arrays_hash();
}

void ReconstructionModel::save(const std::filesystem::path& path) const {
  Archive a;
  a.header["kind"] = "recon_weights";
  a.header["config"] = config_.to_json();
  a.arrays = params_.snapshot();
  write_archive(a, path);
  nlohmann::ordered_json sidecar;
  sidecar["config"] = config_.to_json();
  sidecar["weights_hash"] = a.arrays_hash();
  detail::write_file_atomic(path.string() + ".json", sidecar.dump(2) + "\n");
}

HSICube reconstruct(const RGBFrame& rgb, const ReconstructionModel& model) {
  return HSICube::from_tensor(model.forward(ag::Var(rgb.to_tensor())).value());
}

ReconstructionModel load_recon_weights(const std::filesystem::path& path,
                                       const std::optional<ReconConfig>& expected) {
  Archive a = read_archive(path);
  if (a.header.value("kind", "") != "recon_weights") {
    throw CheckpointError(path.string() + ": not a reconstruction weight archive");
  }
  ReconConfig config = ReconConfig::from_json(a.header.at("config"));
  const std::filesystem::path sidecar = path.string() + ".json";
  if (std::filesystem::exists(sidecar)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(detail::read_file(sidecar.string()));
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError(sidecar.string() + ": " + e.what());
    }
    if (!(ReconConfig::from_json(j.at("config")) == config)) {
      throw CheckpointError(sidecar.string() + ": config sidecar disagrees with archive header");
    }
  }
  if (expected && !(*expected == config)) {
    throw CheckpointError(path.string() + ": checkpoint config " + config.to_json().dump() +
                          " does not match expected " + expected->to_json().dump());
  }
  try {
    config.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(path.string() + ": " + e.what());
  }
  ReconstructionModel model(config, 0);
  model.params().load(a.arrays, path.string());
  return model;
}

ReconstructionModel freeze(ReconstructionModel model) {
  model.freeze();
  return model;
}

double psnr(const HSICube& pred, const HSICube& ref, double peak) {
  if (pred.height() != ref.height() || pred.width() != ref.width()) {
    throw ShapeError("psnr: cube shapes differ");
  }
  if (!(peak > 0.0)) throw DomainError("psnr: peak must be positive");
  const auto p = pred.values();
  const auto r = ref.values();
  double sq = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = static_cast<double>(p[i]) - static_cast<double>(r[i]);
    sq += d * d;
  }
  const double rmse = std::sqrt(sq / static_cast<double>(p.size()));
  if (rmse == 0.0) return std::numeric_limits<double>::infinity();
  return 20.0 * std::log10(peak / rmse);
}

}  // namespace hyperfake::recon
