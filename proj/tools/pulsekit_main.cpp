// Command-line front end: dataset generation, training, evaluation, the
// ablation study, and plot-data export. Every run is a pure function of its
// config file, CLI overrides, and seeds; no environment variables are read.

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "pulsekit/errors.hpp"
#include "pulsekit/io.hpp"
#include "pulsekit/pipeline.hpp"
#include "pulsekit/render.hpp"
#include "pulsekit/train.hpp"

namespace stdfs = std::filesystem;
using namespace pulsekit;

namespace {

// Every key any subcommand understands. Unknown keys are rejected up front so
// a typo cannot silently fall back to a default.
const std::set<std::string> kKnownKeys = {
    "dataset.n_clips", "dataset.height", "dataset.width", "dataset.fs",
    "dataset.duration_s", "dataset.seed", "dataset.hr_bpm_lo",
    "dataset.hr_bpm_hi", "dataset.hr_jitter_lo", "dataset.hr_jitter_hi",
    "dataset.systolic_width_lo", "dataset.systolic_width_hi",
    "dataset.dicrotic_amp_lo", "dataset.dicrotic_amp_hi",
    "dataset.pulse_scale_lo", "dataset.pulse_scale_hi",
    "dataset.noise_sigma_lo", "dataset.noise_sigma_hi",
    "dataset.specular_amp_lo", "dataset.specular_amp_hi",
    "dataset.motion_amp_lo", "dataset.motion_amp_hi",
    "data.manifest",
    "split.test_fraction", "split.seed",
    "train.epochs", "train.batch_size", "train.lr", "train.window_t",
    "train.window_stride", "train.epsilon", "train.standardize_targets",
    "train.seed", "train.split",
    "model.arch", "model.fd_input", "model.sd_input", "model.fd_target",
    "model.sd_target", "model.loss", "model.weight_fd", "model.weight_sd",
    "model.filters_a", "model.filters_b", "model.gru_hidden",
    "model.input_hw", "model.seed",
    "eval.smooth_window_s", "eval.epsilon", "eval.split", "eval.checkpoint",
    "eval.truth",
    "ablate.appendix",
    "plots.max_clips",
};

// Typed view over the flat key=value map.
class Config {
 public:
  explicit Config(std::map<std::string, std::string> kv) : kv_(std::move(kv)) {
    for (const auto& [key, value] : kv_) {
      if (!kKnownKeys.count(key)) {
        throw BadConfig("unknown config key '" + key + "'");
      }
    }
  }

  std::string get_string(const std::string& key,
                         const std::string& fallback) const {
    const auto it = kv_.find(key);
    return it == kv_.end() ? fallback : it->second;
  }

  double get_double(const std::string& key, double fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw BadConfig(key + ": '" + it->second + "' is not a number");
    }
  }

  int64_t get_i64(const std::string& key, int64_t fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    try {
      size_t used = 0;
      const long long v = std::stoll(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument("trailing");
      return v;
    } catch (const std::exception&) {
      throw BadConfig(key + ": '" + it->second + "' is not an integer");
    }
  }

  uint64_t get_u64(const std::string& key, uint64_t fallback) const {
    const int64_t v =
        get_i64(key, static_cast<int64_t>(fallback));  // config seeds are
    if (v < 0) throw BadConfig(key + ": must be non-negative");
    return static_cast<uint64_t>(v);
  }

  bool get_bool(const std::string& key, bool fallback) const {
    const auto it = kv_.find(key);
    if (it == kv_.end()) return fallback;
    if (it->second == "1" || it->second == "true") return true;
    if (it->second == "0" || it->second == "false") return false;
    throw BadConfig(key + ": '" + it->second + "' is not a boolean (0/1)");
  }

 private:
  std::map<std::string, std::string> kv_;
};

SamplerRanges ranges_from(const Config& cfg) {
  const SamplerRanges d;  // library defaults double as config defaults
  SamplerRanges r;
  const auto interval = [&](const char* name, const Interval& dflt) {
    const std::string base = std::string("dataset.") + name;
    return Interval{cfg.get_double(base + "_lo", dflt.lo),
                    cfg.get_double(base + "_hi", dflt.hi)};
  };
  r.hr_bpm = interval("hr_bpm", d.hr_bpm);
  r.hr_jitter = interval("hr_jitter", d.hr_jitter);
  r.systolic_width = interval("systolic_width", d.systolic_width);
  r.dicrotic_amp = interval("dicrotic_amp", d.dicrotic_amp);
  r.pulse_scale = interval("pulse_scale", d.pulse_scale);
  r.noise_sigma = interval("noise_sigma", d.noise_sigma);
  r.specular_amp = interval("specular_amp", d.specular_amp);
  r.motion_amp = interval("motion_amp", d.motion_amp);
  return r;
}

TrainConfig train_config_from(const Config& cfg) {
  const TrainConfig d;
  TrainConfig t;
  t.epochs = cfg.get_i64("train.epochs", d.epochs);
  t.batch_size = cfg.get_i64("train.batch_size", d.batch_size);
  t.lr = cfg.get_double("train.lr", d.lr);
  t.window_t = cfg.get_i64("train.window_t", d.window_t);
  t.window_stride = cfg.get_i64("train.window_stride", d.window_stride);
  t.epsilon = cfg.get_double("train.epsilon", d.epsilon);
  t.standardize_targets =
      cfg.get_bool("train.standardize_targets", d.standardize_targets);
  t.seed = cfg.get_u64("train.seed", d.seed);
  return t;
}

ModelConfig model_config_from(const Config& cfg) {
  const ModelConfig d;
  ModelConfig m;
  m.arch = arch_from_string(cfg.get_string("model.arch", to_string(d.arch)));
  m.use_fd_input = cfg.get_bool("model.fd_input", d.use_fd_input);
  m.use_sd_input = cfg.get_bool("model.sd_input", d.use_sd_input);
  m.use_fd_target = cfg.get_bool("model.fd_target", d.use_fd_target);
  m.use_sd_target = cfg.get_bool("model.sd_target", d.use_sd_target);
  m.loss_kind =
      loss_kind_from_string(cfg.get_string("model.loss", to_string(d.loss_kind)));
  m.weight_fd = cfg.get_double("model.weight_fd", d.weight_fd);
  m.weight_sd = cfg.get_double("model.weight_sd", d.weight_sd);
  m.filters_a = cfg.get_i64("model.filters_a", d.filters_a);
  m.filters_b = cfg.get_i64("model.filters_b", d.filters_b);
  m.gru_hidden = cfg.get_i64("model.gru_hidden", d.gru_hidden);
  return m;
}

EvalConfig eval_config_from(const Config& cfg) {
  const EvalConfig d;
  EvalConfig e;
  e.smooth_window_s = cfg.get_double("eval.smooth_window_s", d.smooth_window_s);
  e.epsilon = cfg.get_double("eval.epsilon", d.epsilon);
  return e;
}

std::string join_dir(const std::string& dir, const std::string& rel) {
  return (stdfs::path(dir) / rel).string();
}

// Loads the rendered dataset a manifest describes; paths are relative to the
// manifest's directory.
std::vector<ClipRecord> load_dataset(const std::string& manifest_path) {
  const std::vector<ManifestEntry> entries = load_manifest(manifest_path);
  if (entries.empty()) {
    throw EmptyDataset("manifest " + manifest_path + " lists no clips");
  }
  const std::string dir = stdfs::path(manifest_path).parent_path().string();
  std::vector<ClipRecord> clips;
  clips.reserve(entries.size());
  for (const ManifestEntry& e : entries) {
    ClipRecord rec;
    rec.video = load_clip_tensor(join_dir(dir, e.tensor_path));
    const ClipSidecar sc = load_clip_sidecar(join_dir(dir, e.sidecar_path));
    rec.video.source_ppg = sc.ppg;
    rec.fiducials = sc.fiducials;
    rec.hr_bpm = e.params.hr_bpm;
    rec.params = e.params;
    clips.push_back(std::move(rec));
  }
  return clips;
}

// Picks the side of the shared seeded split named by `which`.
std::vector<ClipRecord> take_side(std::vector<ClipRecord> clips,
                                  const Config& cfg, const std::string& which,
                                  uint64_t split_seed) {
  if (which == "all") return clips;
  if (which != "train" && which != "test") {
    throw BadConfig("split side must be train, test, or all, got '" + which +
                    "'");
  }
  const SplitIndices split =
      split_clips(static_cast<int64_t>(clips.size()),
                  cfg.get_double("split.test_fraction", 0.2), split_seed);
  const std::vector<int64_t>& keep =
      which == "train" ? split.train : split.test;
  std::vector<ClipRecord> side;
  side.reserve(keep.size());
  for (const int64_t i : keep) {
    side.push_back(std::move(clips[static_cast<size_t>(i)]));
  }
  return side;
}

std::string require_key(const Config& cfg, const std::string& key) {
  const std::string v = cfg.get_string(key, "");
  if (v.empty()) throw BadConfig("config key '" + key + "' is required");
  return v;
}

std::string clip_basename(int64_t i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "clip_%04" PRId64 ".%s", i, ext);
  return buf;
}

int run_gen_data(const Config& cfg, const std::string& out_dir) {
  const int64_t n = cfg.get_i64("dataset.n_clips", 8);
  const int64_t height = cfg.get_i64("dataset.height", 36);
  const int64_t width = cfg.get_i64("dataset.width", 36);
  const double fs = cfg.get_double("dataset.fs", 30.0);
  const double duration = cfg.get_double("dataset.duration_s", 6.0);
  const uint64_t seed = cfg.get_u64("dataset.seed", 0);

  const std::vector<ClipRecord> records =
      make_dataset(n, ranges_from(cfg), height, width, fs, duration, seed);

  std::vector<ManifestEntry> manifest;
  manifest.reserve(records.size());
  int64_t saturated = 0;
  for (size_t i = 0; i < records.size(); ++i) {
    const ClipRecord& rec = records[i];
    ManifestEntry e;
    e.clip_id = static_cast<int64_t>(i);
    e.params = rec.params;
    e.tensor_path = clip_basename(e.clip_id, "f32");
    e.sidecar_path = clip_basename(e.clip_id, "csv");
    save_clip_tensor(join_dir(out_dir, e.tensor_path), rec.video);
    save_clip_sidecar(join_dir(out_dir, e.sidecar_path),
                      rec.video.source_ppg, rec.fiducials);
    if (rec.video.saturation_warning) ++saturated;
    manifest.push_back(std::move(e));
  }
  save_manifest(join_dir(out_dir, "manifest.csv"), manifest);

  std::cout << "wrote " << n << " clips and manifest.csv to " << out_dir;
  if (saturated > 0) std::cout << " (" << saturated << " saturated)";
  std::cout << "\n";
  return 0;
}

int run_train(const Config& cfg, const std::string& out_dir) {
  const std::vector<ClipRecord> clips = take_side(
      load_dataset(require_key(cfg, "data.manifest")), cfg,
      cfg.get_string("train.split", "train"), cfg.get_u64("split.seed", 0));

  const ModelConfig mc = model_config_from(cfg);
  const TrainConfig tc = train_config_from(cfg);
  Model model = build_model(mc, cfg.get_i64("model.input_hw", 36),
                            tc.window_t, cfg.get_u64("model.seed", 0));
  const TrainResult result = train_model(model, clips, tc);

  save_checkpoint(join_dir(out_dir, "checkpoint.ckpt"), model);
  save_checkpoint(join_dir(out_dir, "checkpoint_best.ckpt"), model,
                  result.best_params);
  save_loss_csv(join_dir(out_dir, "loss.csv"), result.epoch_loss);

  std::cout << "trained " << result.epoch_loss.size() << " epochs ("
            << result.steps_taken << " steps) on " << clips.size()
            << " clips; final loss " << csv_double(result.epoch_loss.back())
            << ", best epoch " << (result.best_epoch + 1) << "; artifacts in "
            << out_dir << "\n";
  return 0;
}

int run_eval(const Config& cfg, const std::string& out_dir) {
  const std::vector<ClipRecord> clips = take_side(
      load_dataset(require_key(cfg, "data.manifest")), cfg,
      cfg.get_string("eval.split", "test"), cfg.get_u64("split.seed", 0));
  const EvalConfig ec = eval_config_from(cfg);

  EvalOutput ev;
  if (cfg.get_bool("eval.truth", false)) {
    ev = evaluate_truth(clips, ec);
  } else {
    const Checkpoint ck =
        load_checkpoint(require_key(cfg, "eval.checkpoint"));
    ev = evaluate_model(model_from_checkpoint(ck), clips, ec);
  }

  save_eval_report_json(join_dir(out_dir, "report.json"), ev.report);
  save_bland_altman_csv(join_dir(out_dir, "ba_hr.csv"), ev.report.ba_hr);
  save_bland_altman_csv(join_dir(out_dir, "ba_lvet.csv"), ev.report.ba_lvet);
  save_lvet_series_csv(join_dir(out_dir, "lvet_series.csv"), ev.series);

  std::cout << "evaluated " << ev.report.clips_evaluated << " clips (skipped "
            << ev.report.clips_skipped << "): HR MAE "
            << csv_double(ev.report.hr_mae.mean) << " +- "
            << csv_double(ev.report.hr_mae.std) << " BPM, LVET MAE "
            << csv_double(ev.report.lvet_mae.mean) << " +- "
            << csv_double(ev.report.lvet_mae.std) << " ms; artifacts in "
            << out_dir << "\n";
  return 0;
}

int run_ablate(const Config& cfg, const std::string& out_dir) {
  const std::vector<ClipRecord> clips =
      load_dataset(require_key(cfg, "data.manifest"));

  AblationConfig ac;
  ac.train = train_config_from(cfg);
  ac.eval = eval_config_from(cfg);
  ac.base = model_config_from(cfg);
  ac.input_hw = cfg.get_i64("model.input_hw", 36);
  ac.model_seed = cfg.get_u64("model.seed", 0);
  ac.test_fraction = cfg.get_double("split.test_fraction", 0.2);
  ac.split_seed = cfg.get_u64("split.seed", 0);
  ac.include_appendix = cfg.get_bool("ablate.appendix", false);

  const std::vector<AblationRow> rows = run_ablation(clips, ac);
  save_ablation_csv(join_dir(out_dir, "ablation.csv"), rows);

  int64_t failed = 0;
  for (const AblationRow& r : rows) {
    if (!r.failure.empty()) ++failed;
  }
  std::cout << "ablation wrote " << rows.size() << " rows ("
            << (rows.size() - static_cast<size_t>(failed)) << " ok, "
            << failed << " failed) to " << join_dir(out_dir, "ablation.csv")
            << "\n";
  return 0;
}

int run_export_plots(const Config& cfg, const std::string& out_dir) {
  const std::vector<ClipRecord> clips = take_side(
      load_dataset(require_key(cfg, "data.manifest")), cfg,
      cfg.get_string("eval.split", "test"), cfg.get_u64("split.seed", 0));
  const Checkpoint ck = load_checkpoint(require_key(cfg, "eval.checkpoint"));
  const Model model = model_from_checkpoint(ck);
  const EvalConfig ec = eval_config_from(cfg);

  const auto limit = static_cast<size_t>(cfg.get_i64("plots.max_clips", 4));
  const size_t count = std::min(limit, clips.size());
  for (size_t i = 0; i < count; ++i) {
    const WaveformSeries w = waveform_series(model, clips[i], ec);
    save_waveforms_csv(
        join_dir(out_dir,
                 clip_basename(static_cast<int64_t>(i), "waveforms.csv")),
        w);
  }
  std::cout << "wrote waveform csvs for " << count << " clips to " << out_dir
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"synthetic-video cardiac measurement workbench"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  std::vector<std::string> overrides;
  int64_t seed = -1;
  app.add_option("--config", config_path, "key=value config file");
  app.add_option("--seed", seed,
                 "override the subcommand's primary seed (gen-data: "
                 "dataset.seed, train/ablate: train.seed, eval/export-plots: "
                 "split.seed)");
  app.add_option("--out", out_dir, "output directory (default: out)");
  app.add_option("--set", overrides,
                 "extra key=value override, may repeat");

  CLI::App* gen = app.add_subcommand(
      "gen-data", "render a synthetic dataset with ground truth");
  CLI::App* train =
      app.add_subcommand("train", "train a model on a rendered dataset");
  CLI::App* eval_cmd = app.add_subcommand(
      "eval", "evaluate a checkpoint (or the ground truth) on a dataset");
  CLI::App* ablate =
      app.add_subcommand("ablate", "train and evaluate the full input/target "
                                   "grid for both architectures");
  CLI::App* plots = app.add_subcommand(
      "export-plots", "dump stitched prediction/truth waveforms as csv");
  for (CLI::App* sub : {gen, train, eval_cmd, ablate, plots}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    const nlohmann::json j = {{"error", "BadConfig"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 1;
  }

  try {
    std::map<std::string, std::string> kv;
    if (!config_path.empty()) kv = read_kv_file(config_path);
    apply_kv_overrides(kv, overrides);
    if (seed >= 0) {
      const char* key = app.got_subcommand(gen)      ? "dataset.seed"
                        : app.got_subcommand(train)  ? "train.seed"
                        : app.got_subcommand(ablate) ? "train.seed"
                                                     : "split.seed";
      kv[key] = std::to_string(seed);
    }
    const Config cfg(std::move(kv));

    if (app.got_subcommand(gen)) return run_gen_data(cfg, out_dir);
    if (app.got_subcommand(train)) return run_train(cfg, out_dir);
    if (app.got_subcommand(eval_cmd)) return run_eval(cfg, out_dir);
    if (app.got_subcommand(ablate)) return run_ablate(cfg, out_dir);
    return run_export_plots(cfg, out_dir);
  } catch (const Error& e) {
    const nlohmann::json j = {{"error", e.code()}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    const nlohmann::json j = {{"error", "Internal"}, {"message", e.what()}};
    std::cerr << j.dump() << "\n";
    return 2;
  }
}
