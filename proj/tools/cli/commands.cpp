// Copyright 2026 The HyperFake Authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "cli.hpp"
#include "hyperfake/data/cube_io.hpp"
#include "hyperfake/data/image_io.hpp"
#include "hyperfake/data/synth.hpp"
#include "hyperfake/eval/metrics.hpp"
#include "hyperfake/recon/model.hpp"
#include "hyperfake/spectral/attention.hpp"
#include "hyperfake/training/trainer.hpp"
#include "run_manifest.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;

namespace hyperfake::cli {

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kCheckpoint:
    case ErrorKind::kIntegrity:
      return kExitIntegrity;
    case ErrorKind::kNumeric:
      return kExitNumeric;
    default:
      return kExitUsage;
  }
}

namespace {

constexpr const char* kRunManifest = "run_manifest.json";
constexpr const char* kReconFile = "recon.hfw";
constexpr const char* kHistoryFile = "history.json";

struct Globals {
  std::uint64_t seed = 0;
  bool seed_given = false;
  bool deterministic = false;
};

std::size_t to_size(const std::string& key, const std::string& text) {
  std::size_t v = 0;
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("'" + key + "': not a non-negative integer: " + text);
  return v;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json read_json(const fs::path& path) {
  try {
    return nlohmann::json::parse(read_text(path));
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

fs::path manifest_path_for(const fs::path& output) {
  if (fs::is_directory(output)) return output / kRunManifest;
  return output.parent_path() / (output.stem().string() + "." + kRunManifest);
}

std::optional<fs::path> cache_dir_from_env() {
  if (const char* dir = std::getenv("HYPERFAKE_CACHE_DIR"); dir && *dir) return fs::path(dir);
  return std::nullopt;
}

// Reconstruction model source shared by reconstruct, train and bench-recon.
struct ReconFlags {
  std::string weights;
  bool random_init = false;
  recon::ReconConfig config;

  void add(CLI::App* app, bool with_source) {
    if (with_source) {
      app->add_option("--recon-weights", weights, "Reconstruction weight archive");
      app->add_flag("--random-init", random_init, "Use a seeded random-init reconstruction model");
    }
    app->add_option("--recon-stages", config.n_stages, "Reconstruction stages (random init)");
    app->add_option("--recon-channels", config.feature_channels, "Reconstruction feature width (random init)");
    app->add_option("--recon-heads", config.n_heads, "Reconstruction attention heads (random init)");
    app->add_option("--flexi-downsample", config.flexi_downsample, "FlexiAttention downsample factor (2 or 4)");
  }

  bool given() const { return !weights.empty() || random_init; }

  recon::ReconstructionModel load(Resolution resolution, std::uint64_t seed) const {
    if (!weights.empty() && random_init) {
      throw ValidationError("--recon-weights and --random-init are mutually exclusive");
    }
    if (!weights.empty()) return recon::freeze(recon::load_recon_weights(weights));
    if (!random_init) throw ValidationError("reconstruction weights required: pass --recon-weights or --random-init");
    recon::ReconConfig c = config;
    c.resolution = resolution;
    return recon::freeze(recon::ReconstructionModel(c, seed));
  }
};

std::vector<std::size_t> parse_bands(const std::string& text) {
  std::vector<std::size_t> bands;
  std::stringstream s(text);
  std::string item;
  while (std::getline(s, item, ',')) {
    long v = 0;
    const char* end = item.data() + item.size();
    const auto [ptr, ec] = std::from_chars(item.data(), end, v);
    if (ec != std::errc() || ptr != end || v < 1 || v > static_cast<long>(kSpectralBands)) {
      throw ValidationError("band out of range 1..31: '" + item + "'");
    }
    bands.push_back(static_cast<std::size_t>(v));
  }
  if (bands.empty()) throw ValidationError("--bands needs at least one band");
  return bands;
}

// ---- synth -----------------------------------------------------------------

struct SynthArgs {
  int n = 16;
  std::string out;
  std::size_t height = 64, width = 64;
  double train_fraction = 0.7;
};

int cmd_synth(const SynthArgs& a, const Globals& g, const std::vector<std::string>& argv, std::ostream& out) {
  RunRecorder rec("synth", argv);
  SynthOptions o;
  o.n_per_class = a.n;
  o.resolution = {a.height, a.width};
  o.seed = g.seed;
  o.train_fraction = a.train_fraction;
  const DatasetManifest m = synth_dataset(o, a.out);
  rec.config() = {{"n_per_class", a.n}, {"height", a.height}, {"width", a.width}, {"train_fraction", a.train_fraction}};
  rec.seed("seed", g.seed);
  for (const SampleRecord& r : m.records) rec.output(m.resolve(r));
  rec.output(fs::path(a.out) / "manifest.jsonl");
  rec.write(fs::path(a.out) / kRunManifest);
  const auto counts = m.split_counts();
  out << "wrote " << m.records.size() << " frames (train " << counts.at(Split::kTrain) << ", val "
      << (counts.count(Split::kVal) ? counts.at(Split::kVal) : 0) << ") to " << a.out << "\n";
  return kExitOk;
}

// ---- reconstruct -----------------------------------------------------------

struct ReconstructArgs {
  std::vector<std::string> frames;
  std::string manifest;
  std::string out;
  std::string bands;
  std::size_t height = 64, width = 64;
  ReconFlags recon;
};

int cmd_reconstruct(const ReconstructArgs& a, const Globals& g, const std::vector<std::string>& argv,
                    std::ostream& out) {
  const std::vector<std::size_t> bands = a.bands.empty() ? std::vector<std::size_t>{} : parse_bands(a.bands);
  if (a.frames.empty() && a.manifest.empty()) throw ValidationError("no input frames: pass frame paths or --manifest");
  const recon::ReconstructionModel model = a.recon.load({a.height, a.width}, g.seed);
  const Resolution res = model.config().resolution;

  RunRecorder rec("reconstruct", argv);
  rec.seed("seed", g.seed);
  rec.config() = {{"recon", model.config().to_json()}, {"recon_weights_hash", model.weights_hash()},
                  {"random_init", a.recon.random_init}};
  if (!a.recon.weights.empty()) rec.input(a.recon.weights);

  std::vector<std::pair<fs::path, std::string>> inputs;  // frame, output stem
  for (const std::string& f : a.frames) inputs.emplace_back(f, fs::path(f).stem().string());
  if (!a.manifest.empty()) {
    rec.input(a.manifest);
    const DatasetManifest m = load_manifest(a.manifest);
    for (const SampleRecord& r : m.records) inputs.emplace_back(m.resolve(r), fs::path(r.frame_path).stem().string());
  }
  std::set<std::string> stems;
  for (const auto& [frame, stem] : inputs) {
    if (!stems.insert(stem).second) throw ValidationError("two input frames share the output name '" + stem + "'");
  }

  fs::create_directories(a.out);
  nlohmann::ordered_json scales = nlohmann::ordered_json::object();
  for (const auto& [frame, stem] : inputs) {
    rec.input(frame);
    const HSICube cube = recon::reconstruct(load_frame(frame, res), model);
    const fs::path cube_path = fs::path(a.out) / (stem + ".hsc1");
    write_cube(cube, cube_path);
    rec.output(cube_path);
    for (std::size_t b : bands) {
      const auto values = cube.band(b - 1);
      const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
      std::vector<std::uint8_t> px(values.size());
      const double span = static_cast<double>(*hi) - static_cast<double>(*lo);
      for (std::size_t i = 0; i < values.size(); ++i) {
        const double u = span > 0 ? (static_cast<double>(values[i]) - *lo) / span : 0.0;
        px[i] = static_cast<std::uint8_t>(std::lround(u * 255.0));
      }
      char suffix[16];
      std::snprintf(suffix, sizeof suffix, "_band%02zu.png", b);
      const fs::path png = fs::path(a.out) / (stem + suffix);
      write_png_gray8(png, cube.height(), cube.width(), px);
      rec.output(png);
      scales[png.filename().string()] = {{"band", b}, {"min", *lo}, {"max", *hi}};
    }
  }
  if (!bands.empty()) rec.extra()["band_scales"] = scales;
  rec.write(fs::path(a.out) / kRunManifest);
  out << "reconstructed " << inputs.size() << " frame(s) into " << a.out << "\n";
  return kExitOk;
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string manifest, config_file, out;
  std::map<std::string, std::string> flags;  // config key → flag text, filled by CLI11
  std::size_t stop_after = 0;
  bool resume = false;
  bool quiet = false;
  ReconFlags recon;
};

const std::vector<std::pair<std::string, std::string>>& train_flag_keys() {
  static const std::vector<std::pair<std::string, std::string>> keys = {
      {"--epochs", "epochs"},
      {"--batch-size", "batch_size"},
      {"--lr0", "lr0"},
      {"--lr-min", "lr_min"},
      {"--adam-beta1", "adam_beta1"},
      {"--adam-beta2", "adam_beta2"},
      {"--adam-eps", "adam_eps"},
      {"--eval-every", "eval_every"},
      {"--backbone", "backbone"},
      {"--recalib-reduction", "recalib_reduction"},
      {"--pool-size", "pool_size"},
      {"--attn-dim", "attn_dim"},
      {"--heads", "heads"},
      {"--height", "height"},
      {"--width", "width"},
  };
  return keys;
}

struct TrainSetup {
  training::TrainConfig train;
  training::DetectorConfig detector;
  recon::ReconConfig recon;
};

void apply_key(TrainSetup& s, const std::string& key, const std::string& value) {
  if (s.train.set(key, value)) return;
  if (key == "backbone") s.detector.classifier.backbone = classifier::parse_backbone(value);
  else if (key == "recalib_reduction") s.detector.classifier.recalib_reduction = to_size(key, value);
  else if (key == "pool_size") s.detector.spectral.pool_size = to_size(key, value);
  else if (key == "attn_dim") s.detector.spectral.attn_dim = to_size(key, value);
  else if (key == "heads") s.detector.spectral.heads = to_size(key, value);
  else if (key == "height") s.recon.resolution.height = to_size(key, value);
  else if (key == "width") s.recon.resolution.width = to_size(key, value);
  else if (key == "recon_stages") s.recon.n_stages = to_size(key, value);
  else if (key == "recon_channels") s.recon.feature_channels = to_size(key, value);
  else if (key == "recon_heads") s.recon.n_heads = to_size(key, value);
  else if (key == "flexi_downsample") s.recon.flexi_downsample = to_size(key, value);
  else throw ConfigError("unknown config key '" + key + "'");
}

int cmd_train(TrainArgs& a, const Globals& g, const std::vector<std::string>& argv,
              const std::set<std::string>& recon_flags_given, std::ostream& out) {
  RunRecorder rec("train", argv);
  TrainSetup s;
  s.recon = a.recon.config;
  if (!a.config_file.empty()) {
    rec.input(a.config_file);
    for (const auto& [k, v] : training::parse_key_values(read_text(a.config_file))) {
      // Reconstruction flags given on the command line win over the file.
      if (recon_flags_given.count(k)) continue;
      apply_key(s, k, v);
    }
  }
  for (const auto& [key, value] : a.flags) apply_key(s, key, value);
  if (g.seed_given) s.train.seed = g.seed;
  if (!a.out.empty()) s.train.checkpoint_dir = a.out;
  s.detector.classifier.input_resolution = s.recon.resolution;
  s.train.validate();
  s.detector.validate();

  rec.input(a.manifest);
  DatasetManifest manifest = load_manifest(a.manifest);
  manifest.resolution = s.recon.resolution;

  ReconFlags source = a.recon;
  source.config = s.recon;
  const recon::ReconstructionModel model = source.load(s.recon.resolution, s.train.seed);
  if (!a.recon.weights.empty()) rec.input(a.recon.weights);
  if (!(model.config().resolution == manifest.resolution)) {
    throw ConfigError("reconstruction weights were built for a different resolution");
  }

  const fs::path dir = s.train.checkpoint_dir;
  fs::create_directories(dir);
  const fs::path recon_copy = dir / kReconFile;
  model.save(recon_copy);

  training::TrainOptions opts;
  if (a.stop_after > 0) opts.stop_after_epochs = a.stop_after;
  if (a.resume) opts.resume_from = dir / training::kCheckpointFile;
  opts.cache_dir = cache_dir_from_env();
  if (!a.quiet) {
    opts.on_epoch = [&out](const training::HistoryEntry& h) { out << h.to_json().dump() << "\n"; };
  }
  const training::TrainResult result = training::train(manifest, model, s.detector, s.train, opts);

  const fs::path history = dir / kHistoryFile;
  write_text(history, training::history_json(result.history).dump(2) + "\n");
  rec.config() = {{"train", s.train.to_json()}, {"detector", s.detector.to_json()}, {"recon", model.config().to_json()}};
  rec.seed("seed", s.train.seed);
  rec.extra()["recon_weights_hash"] = model.weights_hash();
  rec.output(result.checkpoint);
  rec.output(recon_copy);
  rec.output(recon_copy.string() + ".json");
  rec.output(history);
  rec.write(dir / kRunManifest);
  if (!result.history.empty()) {
    const auto& last = result.history.back();
    out << "trained " << last.epoch << " epoch(s); train_acc " << last.train_acc << "; checkpoint "
        << result.checkpoint.string() << "\n";
  }
  return kExitOk;
}

// ---- eval / infer / export-bands ------------------------------------------

recon::ReconstructionModel recon_for_checkpoint(const std::string& weights, const fs::path& checkpoint) {
  const fs::path path = weights.empty() ? checkpoint.parent_path() / kReconFile : fs::path(weights);
  if (!fs::exists(path)) {
    throw ValidationError("reconstruction weights not found at " + path.string() + "; pass --recon-weights");
  }
  return recon::freeze(recon::load_recon_weights(path));
}

Split split_arg(const std::string& text) {
  const auto s = parse_split(text);
  if (!s) throw ValidationError("unknown split '" + text + "' (train, val or test)");
  return *s;
}

struct EvalArgs {
  std::string checkpoint, manifest, split = "val", recon_weights, out;
  double threshold = 0.5;
};

int cmd_eval(const EvalArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunRecorder rec("eval", argv);
  const recon::ReconstructionModel model = recon_for_checkpoint(a.recon_weights, a.checkpoint);
  DatasetManifest manifest = load_manifest(a.manifest);
  manifest.resolution = model.config().resolution;
  eval::EvaluateOptions opts;
  opts.threshold = a.threshold;
  opts.report_path = a.out;
  opts.cache_dir = cache_dir_from_env();
  const fs::path out_path = a.out;
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  const eval::MetricsReport report = eval::evaluate(a.checkpoint, manifest, split_arg(a.split), model, opts);
  rec.input(a.checkpoint);
  rec.input(a.manifest);
  rec.config() = {{"split", a.split}, {"threshold", a.threshold}};
  rec.seed("seed", report.seed);
  rec.output(out_path);
  rec.write(manifest_path_for(out_path));
  out << "accuracy " << report.accuracy << "  auc " << report.auc << "  eer " << report.eer << "  ("
      << report.n << " frames, " << a.split << ")\n";
  return kExitOk;
}

struct InferArgs {
  std::string checkpoint, frame, recon_weights;
  double threshold = 0.5;
};

int cmd_infer(const InferArgs& a, std::ostream& out) {
  const training::TrainState state = training::load_checkpoint(a.checkpoint);
  const recon::ReconstructionModel model = recon_for_checkpoint(a.recon_weights, a.checkpoint);
  if (model.weights_hash() != state.recon_weights_hash) {
    throw IntegrityError("provenance mismatch: checkpoint expects reconstruction weights " +
                         state.recon_weights_hash + ", got " + model.weights_hash());
  }
  const training::DetectorModel detector = training::restore_model(state);
  const HSICube cube = recon::reconstruct(load_frame(a.frame, model.config().resolution), model);
  const classifier::Prediction p = classifier::predict(detector.logit(cube), a.threshold);
  nlohmann::ordered_json j;
  j["probability"] = p.probability;
  j["label"] = p.label;
  out << j.dump() << "\n";
  return kExitOk;
}

struct ExportArgs {
  std::string checkpoint, manifest, split = "val", recon_weights, out;
};

int cmd_export_bands(const ExportArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  RunRecorder rec("export-bands", argv);
  const training::TrainState state = training::load_checkpoint(a.checkpoint);
  const recon::ReconstructionModel model = recon_for_checkpoint(a.recon_weights, a.checkpoint);
  if (model.weights_hash() != state.recon_weights_hash) {
    throw IntegrityError("provenance mismatch: checkpoint expects reconstruction weights " +
                         state.recon_weights_hash + ", got " + model.weights_hash());
  }
  const training::DetectorModel detector = training::restore_model(state);
  DatasetManifest manifest = load_manifest(a.manifest);
  manifest.resolution = model.config().resolution;
  const std::vector<SampleRecord> records = manifest.select(split_arg(a.split));
  if (records.empty()) throw ValidationError("split " + a.split + " is empty");

  training::CubeCache cache(model, cache_dir_from_env());
  Tensor alpha({kSpectralBands, 3});
  Tensor attn;
  for (const SampleRecord& r : records) {
    const training::DetectorModel::Inspection ins = detector.inspect(cache.get(manifest, r));
    if (attn.empty()) attn = Tensor(ins.attn.shape());
    for (std::size_t i = 0; i < alpha.size(); ++i) alpha[i] += ins.mixing.alpha()[i];
    for (std::size_t i = 0; i < attn.size(); ++i) attn[i] += ins.attn[i];
  }
  const double n = static_cast<double>(records.size());
  for (double& v : alpha.data()) v /= n;
  for (double& v : attn.data()) v /= n;
  const fs::path out_path = a.out;
  if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
  spectral::export_band_weights(spectral::BandMixing(alpha), attn, out_path);
  rec.input(a.checkpoint);
  rec.input(a.manifest);
  rec.config() = {{"split", a.split}, {"frames", records.size()}};
  rec.seed("seed", state.train.seed);
  rec.output(out_path);
  rec.write(manifest_path_for(out_path));
  out << "wrote band weights averaged over " << records.size() << " frame(s) to " << a.out << "\n";
  return kExitOk;
}

// ---- plot / bench-recon ----------------------------------------------------

struct PlotArgs {
  std::string report, history, out;
};

int cmd_plot(const PlotArgs& a, const std::vector<std::string>& argv, std::ostream& out) {
  if (a.report.empty() && a.history.empty()) throw ValidationError("plot needs --report and/or --history");
  RunRecorder rec("plot", argv);
  fs::create_directories(a.out);
  if (!a.report.empty()) {
    rec.input(a.report);
    const fs::path svg = fs::path(a.out) / "roc.svg";
    write_text(svg, roc_svg(read_json(a.report)));
    rec.output(svg);
  }
  if (!a.history.empty()) {
    rec.input(a.history);
    const fs::path svg = fs::path(a.out) / "history.svg";
    write_text(svg, history_svg(read_json(a.history)));
    rec.output(svg);
  }
  rec.write(fs::path(a.out) / kRunManifest);
  out << "wrote figures to " << a.out << "\n";
  return kExitOk;
}

struct BenchArgs {
  std::size_t height = 64, width = 64, repeats = 3;
  ReconFlags recon;
};

int cmd_bench_recon(const BenchArgs& a, const Globals& g, std::ostream& out) {
  ReconFlags f = a.recon;
  f.random_init = true;
  const recon::ReconstructionModel model = f.load({a.height, a.width}, g.seed);
  std::mt19937_64 rng(g.seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  std::vector<float> px(3 * a.height * a.width);
  for (float& v : px) v = u(rng);
  const RGBFrame frame(a.height, a.width, std::move(px));
  std::vector<double> times;
  for (std::size_t i = 0; i < std::max<std::size_t>(a.repeats, 1); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const HSICube cube = recon::reconstruct(frame, model);
    times.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  nlohmann::ordered_json j;
  j["recon"] = model.config().to_json();
  j["repeats"] = times.size();
  j["mean_seconds"] = std::accumulate(times.begin(), times.end(), 0.0) / static_cast<double>(times.size());
  j["min_seconds"] = *std::min_element(times.begin(), times.end());
  out << j.dump() << "\n";
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Hyperspectral deepfake detection pipeline", "hyperfake"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  CLI::Option* seed_opt = app.add_option("--seed", g.seed, "Seed for every stochastic component");
  app.add_flag("--deterministic", g.deterministic, "Force single-threaded numeric paths");

  SynthArgs synth;
  auto* s_synth = app.add_subcommand("synth", "Generate the synthetic real/fake corpus");
  s_synth->add_option("--n", synth.n, "Frames per class")->check(CLI::Range(2, 100000));
  s_synth->add_option("--out", synth.out, "Output directory")->required();
  s_synth->add_option("--height", synth.height, "Frame height");
  s_synth->add_option("--width", synth.width, "Frame width");
  s_synth->add_option("--train-fraction", synth.train_fraction, "Share of videos in the train split");

  ReconstructArgs recon_args;
  auto* s_recon = app.add_subcommand("reconstruct", "Reconstruct 31-band cubes from RGB frames");
  s_recon->add_option("frames", recon_args.frames, "Input frame images");
  s_recon->add_option("--manifest", recon_args.manifest, "Reconstruct every frame of a manifest");
  s_recon->add_option("--out", recon_args.out, "Output directory")->required();
  s_recon->add_option("--bands", recon_args.bands, "Comma-separated 1-based bands to export as PNG");
  s_recon->add_option("--height", recon_args.height, "Working height (random init)");
  s_recon->add_option("--width", recon_args.width, "Working width (random init)");
  recon_args.recon.add(s_recon, true);

  TrainArgs train_args;
  auto* s_train = app.add_subcommand("train", "Train band attention and classifier on a manifest");
  s_train->add_option("--manifest", train_args.manifest, "Dataset manifest (JSON Lines)")->required();
  s_train->add_option("--config", train_args.config_file, "Flat key = value config file");
  s_train->add_option("--out", train_args.out, "Checkpoint directory");
  s_train->add_option("--stop-after", train_args.stop_after, "Checkpoint and stop after this many epochs");
  s_train->add_flag("--resume", train_args.resume, "Resume from the checkpoint in the output directory");
  s_train->add_flag("--quiet", train_args.quiet, "Do not print per-epoch history");
  std::map<std::string, std::string> train_flag_values;
  std::vector<std::pair<CLI::Option*, std::string>> train_flag_opts;
  for (const auto& [flag, key] : train_flag_keys()) {
    train_flag_opts.emplace_back(s_train->add_option(flag, train_flag_values[key], "Overrides config key " + key), key);
  }
  train_args.recon.add(s_train, true);

  EvalArgs eval_args;
  auto* s_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest split");
  s_eval->add_option("--checkpoint", eval_args.checkpoint, "Detector checkpoint")->required();
  s_eval->add_option("--manifest", eval_args.manifest, "Dataset manifest")->required();
  s_eval->add_option("--split", eval_args.split, "train, val or test");
  s_eval->add_option("--recon-weights", eval_args.recon_weights, "Defaults to recon.hfw beside the checkpoint");
  s_eval->add_option("--threshold", eval_args.threshold, "Decision threshold on the probability");
  s_eval->add_option("--out", eval_args.out, "Report JSON path")->required();

  InferArgs infer_args;
  auto* s_infer = app.add_subcommand("infer", "Score one frame");
  s_infer->add_option("--checkpoint", infer_args.checkpoint, "Detector checkpoint")->required();
  s_infer->add_option("--frame", infer_args.frame, "Frame image")->required();
  s_infer->add_option("--recon-weights", infer_args.recon_weights, "Defaults to recon.hfw beside the checkpoint");
  s_infer->add_option("--threshold", infer_args.threshold, "Decision threshold on the probability");

  ExportArgs export_args;
  auto* s_export = app.add_subcommand("export-bands", "Export mean band mixing and attention");
  s_export->add_option("--checkpoint", export_args.checkpoint, "Detector checkpoint")->required();
  s_export->add_option("--manifest", export_args.manifest, "Dataset manifest")->required();
  s_export->add_option("--split", export_args.split, "train, val or test");
  s_export->add_option("--recon-weights", export_args.recon_weights, "Defaults to recon.hfw beside the checkpoint");
  s_export->add_option("--out", export_args.out, "Band-weight JSON path")->required();

  PlotArgs plot_args;
  auto* s_plot = app.add_subcommand("plot", "Render ROC and training-history SVGs");
  s_plot->add_option("--report", plot_args.report, "Metrics report JSON");
  s_plot->add_option("--history", plot_args.history, "Training history JSON");
  s_plot->add_option("--out", plot_args.out, "Output directory")->required();

  BenchArgs bench_args;
  auto* s_bench = app.add_subcommand("bench-recon", "Time reconstruction of one random frame");
  s_bench->add_option("--height", bench_args.height, "Frame height");
  s_bench->add_option("--width", bench_args.width, "Frame width");
  s_bench->add_option("--repeats", bench_args.repeats, "Timed repetitions");
  bench_args.recon.add(s_bench, false);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << "\n";
    const auto subs = app.get_subcommands();
    err << (subs.empty() ? app.help() : subs.front()->help());
    return kExitUsage;
  }
  g.seed_given = seed_opt->count() > 0;

  try {
    if (s_synth->parsed()) return cmd_synth(synth, g, args, out);
    if (s_recon->parsed()) return cmd_reconstruct(recon_args, g, args, out);
    if (s_train->parsed()) {
      for (const auto& [opt, key] : train_flag_opts) {
        if (opt->count() > 0) train_args.flags[key] = train_flag_values[key];
      }
      std::set<std::string> recon_given;
      for (const auto& [flag, key] : std::vector<std::pair<std::string, std::string>>{
               {"--recon-stages", "recon_stages"},
               {"--recon-channels", "recon_channels"},
               {"--recon-heads", "recon_heads"},
               {"--flexi-downsample", "flexi_downsample"}}) {
        if (s_train->get_option(flag)->count() > 0) recon_given.insert(key);
      }
      return cmd_train(train_args, g, args, recon_given, out);
    }
    if (s_eval->parsed()) return cmd_eval(eval_args, args, out);
    if (s_infer->parsed()) return cmd_infer(infer_args, out);
    if (s_export->parsed()) return cmd_export_bands(export_args, args, out);
    if (s_plot->parsed()) return cmd_plot(plot_args, args, out);
    if (s_bench->parsed()) return cmd_bench_recon(bench_args, g, out);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}

}  // namespace hyperfake::cli
