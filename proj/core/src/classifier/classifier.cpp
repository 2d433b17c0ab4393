// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include "hyperfake/classifier/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "hyperfake/error.hpp"

namespace hyperfake::classifier {
namespace {

constexpr double kBnEps = 1e-5;
constexpr double kBnMomentum = 0.9;

struct LayerSpec {
  std::size_t width, stride, kernel;
};

std::vector<LayerSpec> layout(Backbone b) {
  if (b == Backbone::kCompact) return {{16, 2, 3}, {32, 2, 3}, {64, 2, 3}, {128, 2, 3}};
  return {{32, 2, 3},  {16, 1, 3},  {24, 2, 3},  {40, 2, 3},  {80, 2, 3},
          {112, 1, 3}, {192, 2, 3}, {320, 1, 3}, {1280, 1, 1}};
}

double stable_sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

}  // namespace

const char* to_string(Backbone b) {
  return b == Backbone::kCompact ? "compact" : "effnet_b0_shape";
}

Backbone parse_backbone(const std::string& name) {
  if (name == "compact") return Backbone::kCompact;
  if (name == "effnet_b0_shape") return Backbone::kEffnetB0Shape;
  throw ConfigError("unknown backbone '" + name + "' (expected compact or effnet_b0_shape)");
}

std::size_t stem_width(Backbone b) { return layout(b).front().width; }

void ClassifierConfig::validate() const {
  if (recalib_reduction < 1 || recalib_reduction > stem_width(backbone)) {
    throw ConfigError("classifier: recalib_reduction must lie in [1, " +
                      std::to_string(stem_width(backbone)) + "]");
  }
  if (input_resolution.height == 0 || input_resolution.width == 0) {
    throw ConfigError("classifier: empty input resolution");
  }
}

nlohmann::ordered_json ClassifierConfig::to_json() const {
  return {{"backbone", to_string(backbone)},
          {"recalib_reduction", recalib_reduction},
          {"height", input_resolution.height},
          {"width", input_resolution.width}};
}

ClassifierConfig ClassifierConfig::from_json(const nlohmann::json& j) {
  ClassifierConfig c;
  c.backbone = parse_backbone(j.at("backbone").get<std::string>());
  c.recalib_reduction = j.at("recalib_reduction").get<std::size_t>();
  c.input_resolution.height = j.at("height").get<std::size_t>();
  c.input_resolution.width = j.at("width").get<std::size_t>();
  return c;
}

Logit::Logit(double v) : value(v) {
  if (!std::isfinite(v)) throw NumericError("logit is not finite");
}

Prediction predict(Logit logit, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw DomainError("predict: threshold must lie in (0, 1)");
  }
  const double p = stable_sigmoid(logit.value);
  return {p, p >= threshold ? 1 : 0};
}

double bce_with_logits(std::span<const double> logits, std::span<const int> labels) {
  Tensor z({logits.size()}, std::vector<double>(logits.begin(), logits.end()));
  return ag::bce_with_logits(ag::Var(std::move(z)), labels).value()[0];
}

RecalibParams make_recalib(std::size_t channels, std::size_t reduction, ParamStore& store,
                           const std::string& prefix, std::mt19937_64& rng) {
  const std::size_t hidden = std::max<std::size_t>(1, channels / reduction);
  RecalibParams p;
  p.w1 = store.add(prefix + "w1", normal_init({hidden, channels}, 1.0 / std::sqrt(double(channels)), rng));
  p.b1 = store.add(prefix + "b1", Tensor({hidden}));
  p.w2 = store.add(prefix + "w2", normal_init({channels, hidden}, 1.0 / std::sqrt(double(hidden)), rng));
  p.b2 = store.add(prefix + "b2", Tensor({channels}));
  return p;
}

ag::Var recalibrate(const ag::Var& features, const RecalibParams& params, Tensor* gates) {
  const Shape& s = features.shape();
  ag::Var x = features;
  if (s.size() == 3) x = ag::reshape(features, {1, s[0], s[1], s[2]});
  if (x.shape().size() != 4) throw ShapeError("recalibrate: expected C×H×W or N×C×H×W, got " + hyperfake::to_string(s));
  if (!x.value().all_finite()) throw NumericError("recalibrate: non-finite features");
  const std::size_t c = x.shape()[1];
  if (params.w1.shape().size() != 2 || params.w1.shape()[1] != c) {
    throw ShapeError("recalibrate: gate parameters sized for a different channel count");
  }
  const ag::Var means = ag::global_avg_pool(x);
  const ag::Var hidden = ag::relu(ag::add_row_bias(ag::matmul(means, ag::transpose(params.w1)), params.b1));
  const ag::Var g =
      ag::sigmoid(ag::add_row_bias(ag::matmul(hidden, ag::transpose(params.w2)), params.b2));
  if (gates) *gates = g.value();
  const ag::Var out = ag::channel_gate(x, g);
  return s.size() == 3 ? ag::reshape(out, s) : out;
}

Classifier::Classifier(const ClassifierConfig& config, ParamStore& store, const std::string& prefix,
                       std::mt19937_64& rng)
    : config_(config) {
  config_.validate();
  input_gate_ = make_recalib(3, config_.recalib_reduction, store, prefix + "recalib_in.", rng);
  std::size_t in = 3;
  const auto specs = layout(config_.backbone);
  for (std::size_t i = 0; i < specs.size(); ++i) {
    const LayerSpec& ls = specs[i];
    ConvBn layer;
    layer.name = prefix + (i == 0 ? std::string("stem") : "stage" + std::to_string(i));
    const double fan_in = static_cast<double>(in * ls.kernel * ls.kernel);
    layer.weight = store.add(layer.name + ".conv",
                             normal_init({ls.width, in, ls.kernel, ls.kernel}, std::sqrt(2.0 / fan_in), rng));
    layer.gamma = store.add(layer.name + ".bn.gamma", Tensor({ls.width}, 1.0));
    layer.beta = store.add(layer.name + ".bn.beta", Tensor({ls.width}));
    layer.running_mean = Tensor({ls.width});
    layer.running_var = Tensor({ls.width}, 1.0);
    layer.stride = ls.stride;
    layer.pad = ls.kernel / 2;
    layers_.push_back(std::move(layer));
    if (i == 0) stem_gate_ = make_recalib(ls.width, config_.recalib_reduction, store, prefix + "recalib_stem.", rng);
    in = ls.width;
  }
  fc_weight_ = store.add(prefix + "head.weight", normal_init({1, in}, 1.0 / std::sqrt(double(in)), rng));
  fc_bias_ = store.add(prefix + "head.bias", Tensor({1}));
}

void Classifier::check_input(const ag::Var& x) const {
  const Shape& s = x.shape();
  const Resolution& r = config_.input_resolution;
  if (s.size() != 4 || s[1] != 3 || s[2] != r.height || s[3] != r.width) {
    throw ShapeError("classify: expected N×3×" + std::to_string(r.height) + "×" +
                     std::to_string(r.width) + ", got " + hyperfake::to_string(s));
  }
}

ag::Var Classifier::run(const ag::Var& input, bool training, std::vector<Shape>* shapes,
                        std::vector<std::pair<Tensor, Tensor>>* stats) const {
  ag::Var x = input.shape().size() == 3 ? ag::reshape(input, {1, input.shape()[0], input.shape()[1], input.shape()[2]})
                                        : input;
  check_input(x);
  x = recalibrate(x, input_gate_);
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const ConvBn& l = layers_[i];
    x = ag::conv2d(x, l.weight, l.stride, l.pad);
    if (training) {
      Tensor mean, var;
      x = ag::batch_norm_train(x, l.gamma, l.beta, kBnEps, &mean, &var);
      if (stats) stats->emplace_back(std::move(mean), std::move(var));
    } else {
      const std::size_t c = l.running_mean.size();
      Tensor shift({c}), inv({c});
      for (std::size_t k = 0; k < c; ++k) {
        shift[k] = -l.running_mean[k];
        inv[k] = 1.0 / std::sqrt(l.running_var[k] + kBnEps);
      }
      x = ag::mul_channel(ag::add_channel_bias(x, ag::Var(std::move(shift))), ag::Var(std::move(inv)));
      x = ag::add_channel_bias(ag::mul_channel(x, l.gamma), l.beta);
    }
    x = ag::silu(x);
    if (i == 0) x = recalibrate(x, stem_gate_);
    if (shapes) shapes->push_back(Shape(x.shape().begin() + 1, x.shape().end()));
  }
  const ag::Var pooled = ag::global_avg_pool(x);
  const ag::Var logits = ag::add_row_bias(ag::matmul(pooled, ag::transpose(fc_weight_)), fc_bias_);
  if (!logits.value().all_finite()) throw NumericError("classify: non-finite logit");
  return ag::reshape(logits, {logits.shape()[0]});
}

ag::Var Classifier::forward(const ag::Var& x, bool training) {
  if (!training) return run(x, false, nullptr, nullptr);
  std::vector<std::pair<Tensor, Tensor>> stats;
  ag::Var out = run(x, true, nullptr, &stats);
  const Shape& s = x.shape();
  // Elements per channel entering each normalization, for the unbiased variance.
  std::size_t h = s[s.size() - 2], w = s[s.size() - 1];
  const std::size_t n = s.size() == 4 ? s[0] : 1;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    ConvBn& l = layers_[i];
    const std::size_t k = l.weight.shape()[2];
    h = (h + 2 * l.pad - k) / l.stride + 1;
    w = (w + 2 * l.pad - k) / l.stride + 1;
    const double count = static_cast<double>(n * h * w);
    const double unbias = count > 1.0 ? count / (count - 1.0) : 1.0;
    const auto& [mean, var] = stats[i];
    for (std::size_t c = 0; c < mean.size(); ++c) {
      l.running_mean[c] = kBnMomentum * l.running_mean[c] + (1.0 - kBnMomentum) * mean[c];
      l.running_var[c] = kBnMomentum * l.running_var[c] + (1.0 - kBnMomentum) * var[c] * unbias;
    }
    round_to_float(l.running_mean);
    round_to_float(l.running_var);
  }
  return out;
}

ag::Var Classifier::forward_eval(const ag::Var& x) const { return run(x, false, nullptr, nullptr); }

std::vector<Shape> Classifier::stage_shapes() const {
  std::vector<Shape> shapes;
  const Resolution& r = config_.input_resolution;
  run(ag::Var(Tensor({1, 3, r.height, r.width}, 0.5)), false, &shapes, nullptr);
  return shapes;
}

std::map<std::string, Tensor> Classifier::buffers() const {
  std::map<std::string, Tensor> out;
  for (const ConvBn& l : layers_) {
    out[l.name + ".bn.running_mean"] = l.running_mean;
    out[l.name + ".bn.running_var"] = l.running_var;
  }
  return out;
}

void Classifier::load_buffers(const std::map<std::string, Tensor>& values, const std::string& context) {
  if (values.size() != 2 * layers_.size()) {
    throw CheckpointError(context + ": expected " + std::to_string(2 * layers_.size()) +
                          " normalization buffers, found " + std::to_string(values.size()));
  }
  for (ConvBn& l : layers_) {
    for (auto [suffix, dst] : {std::pair{".bn.running_mean", &l.running_mean},
                               std::pair{".bn.running_var", &l.running_var}}) {
      const auto it = values.find(l.name + suffix);
      if (it == values.end()) throw CheckpointError(context + ": missing buffer " + l.name + suffix);
      if (it->second.shape() != dst->shape()) {
        throw CheckpointError(context + ": buffer " + l.name + suffix + " has shape " +
                              hyperfake::to_string(it->second.shape()));
      }
      *dst = it->second;
    }
  }
}

void Classifier::zero_head() {
  fc_weight_.mutable_value().fill(0.0);
  fc_bias_.mutable_value().fill(0.0);
}

Logit classify(const ag::Var& reduced, const Classifier& model) {
  if (reduced.shape().size() != 3) {
    throw ShapeError("classify: expected 3×H×W, got " + hyperfake::to_string(reduced.shape()));
  }
  return Logit(model.forward_eval(reduced).value()[0]);
}

}  // namespace hyperfake::classifier
