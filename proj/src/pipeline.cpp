#include "pulsekit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <utility>

#include "pulsekit/errors.hpp"
#include "pulsekit/metrics.hpp"
#include "pulsekit/preprocess.hpp"
#include "pulsekit/rng.hpp"
#include "pulsekit/signal.hpp"

namespace pulsekit {

SplitIndices split_clips(int64_t n_clips, double test_fraction, uint64_t seed) {
  if (n_clips < 2) throw InvalidArgument("need at least 2 clips to split");
  if (!(test_fraction > 0.0) || !(test_fraction < 1.0)) {
    throw InvalidArgument("test_fraction must be inside (0, 1)");
  }
  std::vector<int64_t> idx(static_cast<size_t>(n_clips));
  std::iota(idx.begin(), idx.end(), int64_t{0});
  Rng rng(seed);
  for (int64_t i = n_clips - 1; i > 0; --i) {
    const auto j = static_cast<int64_t>(rng.next_u64() %
                                        static_cast<uint64_t>(i + 1));
    std::swap(idx[static_cast<size_t>(i)], idx[static_cast<size_t>(j)]);
  }
  const auto want = static_cast<int64_t>(
      std::llround(static_cast<double>(n_clips) * test_fraction));
  const int64_t n_test = std::clamp<int64_t>(want, 1, n_clips - 1);

  SplitIndices out;
  out.test.assign(idx.begin(), idx.begin() + n_test);
  out.train.assign(idx.begin() + n_test, idx.end());
  std::sort(out.test.begin(), out.test.end());
  std::sort(out.train.begin(), out.train.end());
  return out;
}

namespace {

// Derivative series of one clip on the clip's own sample grid: fd on the
// pair grid (length N-1), sd on the aligned grid (length N, zero ends).
struct ClipSeries {
  std::vector<double> fd;
  std::vector<double> sd;
  bool has_fd = false;  // whether fd was produced (directly, not derived)
};

ClipSeries truth_series(const PpgSignal& ppg) {
  ClipSeries s;
  s.fd = first_difference(ppg.samples);
  s.sd = aligned_second_difference(ppg.samples);
  s.has_fd = true;
  return s;
}

ClipSeries predict_series(const Model& m, const VideoClip& clip,
                          double epsilon) {
  const int64_t t_win = m.t_window;
  const int64_t n = clip.frames_count;

  // Back-to-back windows, plus one final window anchored at the end so the
  // tail is predicted too; the overlap keeps the first window's values.
  std::vector<int64_t> starts;
  for (int64_t s = 0; s + t_win + 1 <= n; s += t_win) starts.push_back(s);
  if (starts.back() < n - t_win - 1) starts.push_back(n - t_win - 1);

  ClipSeries out;
  out.has_fd = m.cfg.use_fd_target;
  out.fd.assign(static_cast<size_t>(n - 1), 0.0);
  out.sd.assign(static_cast<size_t>(n), 0.0);
  std::vector<char> fd_seen(out.fd.size(), 0);
  std::vector<char> sd_seen(out.sd.size(), 0);

  for (const int64_t start : starts) {
    const TrainingExample ex = make_window(clip, start, t_win, epsilon);
    const Predictions pred = forward(m, ex, RunMode::eval, 0);
    if (pred.has_fd) {
      const std::vector<double>& v = pred.fd.data();
      for (int64_t t = 0; t < t_win; ++t) {
        const auto g = static_cast<size_t>(start + t);
        if (!fd_seen[g]) {
          out.fd[g] = v[static_cast<size_t>(t)];
          fd_seen[g] = 1;
        }
      }
    }
    if (pred.has_sd) {
      const std::vector<double>& v = pred.sd.data();
      // Index 0 of a window's sd stream is the zero pad, never a prediction.
      for (int64_t t = 1; t < t_win; ++t) {
        const auto g = static_cast<size_t>(start + t);
        if (!sd_seen[g]) {
          out.sd[g] = v[static_cast<size_t>(t)];
          sd_seen[g] = 1;
        }
      }
    }
  }

  if (!m.cfg.use_sd_target) {
    // No sd head: derive acceleration by differencing the fd prediction onto
    // the aligned grid (ends stay zero, matching the truth convention).
    for (int64_t t = 1; t + 1 < n; ++t) {
      const auto g = static_cast<size_t>(t);
      out.sd[g] = out.fd[g] - out.fd[g - 1];
    }
  }
  return out;
}

BlandAltman limits_of(const std::vector<double>& pred,
                      const std::vector<double>& truth) {
  if (pred.size() >= 2) return bland_altman(pred, truth);
  // A single pair has no spread; the formula's population std is zero.
  BlandAltman one;
  const double d = pred[0] - truth[0];
  one.mean_diff = one.lower_limit = one.upper_limit = d;
  one.points = {{truth[0], d}};
  return one;
}

using SeriesFn = std::function<ClipSeries(const ClipRecord&)>;

// Shared scoring path for the model arm and the truth arm. Per clip: heart
// rate from the matching derivative kind on both sides, LVET from fiducials
// of each side's sd series, window means paired by window index. Detector
// and spectrum failures skip the clip; everything else propagates.
EvalOutput score_dataset(const std::vector<ClipRecord>& clips,
                         const SeriesFn& predict, const EvalConfig& cfg) {
  EvalOutput out;
  for (size_t ci = 0; ci < clips.size(); ++ci) {
    const ClipRecord& rec = clips[ci];
    const double fs = rec.video.source_ppg.fs;
    try {
      const ClipSeries truth = truth_series(rec.video.source_ppg);
      // Truth fiducials first: a degenerate clip is rejected before any
      // model work happens.
      const Fiducials fid_t = detect_fiducials(truth.sd, fs);
      const auto wins_t = lvet_windows(fid_t, fs, cfg.smooth_window_s);

      const ClipSeries pred = predict(rec);
      const double hr_t = estimate_hr(pred.has_fd ? truth.fd : truth.sd, fs);
      const double hr_p = estimate_hr(pred.has_fd ? pred.fd : pred.sd, fs);
      const Fiducials fid_p = detect_fiducials(pred.sd, fs);
      const auto wins_p = lvet_windows(fid_p, fs, cfg.smooth_window_s);

      out.report.hr_true.push_back(hr_t);
      out.report.hr_pred.push_back(hr_p);
      const std::map<int64_t, double> by_window(wins_t.begin(), wins_t.end());
      for (const auto& [wid, mean_p] : wins_p) {
        const auto it = by_window.find(wid);
        if (it == by_window.end()) continue;
        out.report.lvet_true.push_back(it->second);
        out.report.lvet_pred.push_back(mean_p);
        out.series.push_back({static_cast<int64_t>(ci),
                              static_cast<double>(wid) * cfg.smooth_window_s,
                              it->second, mean_p});
      }
      ++out.report.clips_evaluated;
    } catch (const NoBeatsFound&) {
      ++out.report.clips_skipped;
    } catch (const NoPairedBeats&) {
      ++out.report.clips_skipped;
    } catch (const NoPowerInBand&) {
      ++out.report.clips_skipped;
    } catch (const SignalTooShort&) {
      ++out.report.clips_skipped;
    }
  }

  if (out.report.clips_evaluated == 0) {
    throw NoBeatsFound("no clip produced a usable signal");
  }
  if (out.report.lvet_true.empty()) {
    throw NoPairedBeats("no LVET window was paired across truth and "
                        "prediction");
  }
  out.report.hr_mae = mae_summary(out.report.hr_pred, out.report.hr_true);
  out.report.lvet_mae =
      mae_summary(out.report.lvet_pred, out.report.lvet_true);
  out.report.ba_hr = limits_of(out.report.hr_pred, out.report.hr_true);
  out.report.ba_lvet = limits_of(out.report.lvet_pred, out.report.lvet_true);
  return out;
}

}  // namespace

namespace {

ClipSeries predict_for_record(const Model& m, const ClipRecord& rec,
                              double epsilon) {
  const int64_t hw = m.input_hw;
  const VideoClip* vc = &rec.video;
  VideoClip scratch;
  if (rec.video.height != hw || rec.video.width != hw) {
    if (std::min(rec.video.height, rec.video.width) < hw) {
      throw ShapeMismatch("clip frames are smaller than the model input");
    }
    scratch = crop_downsample(rec.video, hw, hw);
    vc = &scratch;
  }
  if (vc->frames_count < m.t_window + 1) {
    throw ShapeMismatch("clip is shorter than the model window");
  }
  return predict_series(m, *vc, epsilon);
}

}  // namespace

EvalOutput evaluate_model(const Model& m, const std::vector<ClipRecord>& clips,
                          const EvalConfig& cfg) {
  const SeriesFn predict = [&](const ClipRecord& rec) {
    return predict_for_record(m, rec, cfg.epsilon);
  };
  return score_dataset(clips, predict, cfg);
}

EvalOutput evaluate_truth(const std::vector<ClipRecord>& clips,
                          const EvalConfig& cfg) {
  const SeriesFn predict = [](const ClipRecord& rec) {
    return truth_series(rec.video.source_ppg);
  };
  return score_dataset(clips, predict, cfg);
}

std::vector<AblationCell> ablation_grid(bool include_appendix) {
  const std::pair<bool, bool> targets[3] = {
      {true, false}, {false, true}, {true, true}};
  std::vector<AblationCell> cells;
  for (const Arch arch : {Arch::attention, Arch::plain}) {
    for (const bool with_sd_input : {false, true}) {
      for (const auto& [fd_t, sd_t] : targets) {
        cells.push_back({arch, true, with_sd_input, fd_t, sd_t});
      }
    }
  }
  if (include_appendix) {
    for (const auto& [fd_t, sd_t] : targets) {
      cells.push_back({Arch::attention, false, true, fd_t, sd_t});
    }
  }
  return cells;
}

std::string cell_label(const AblationCell& c) {
  if (c.fd_input && !c.sd_input && c.fd_target && !c.sd_target) {
    return "FD-Optimized";
  }
  if (c.fd_input && c.sd_input && !c.fd_target && c.sd_target) {
    return "SD-Optimized";
  }
  return "";
}

std::vector<AblationRow> run_ablation(const std::vector<ClipRecord>& clips,
                                      const AblationConfig& cfg) {
  const SplitIndices split = split_clips(static_cast<int64_t>(clips.size()),
                                         cfg.test_fraction, cfg.split_seed);
  const auto shape_clip = [&](int64_t idx) {
    const ClipRecord& rec = clips[static_cast<size_t>(idx)];
    if (rec.video.height == cfg.input_hw &&
        rec.video.width == cfg.input_hw) {
      return rec;
    }
    ClipRecord shaped;
    shaped.video = crop_downsample(rec.video, cfg.input_hw, cfg.input_hw);
    shaped.fiducials = rec.fiducials;
    shaped.hr_bpm = rec.hr_bpm;
    shaped.params = rec.params;
    return shaped;
  };
  std::vector<ClipRecord> train_clips, test_clips;
  train_clips.reserve(split.train.size());
  test_clips.reserve(split.test.size());
  for (const int64_t i : split.train) train_clips.push_back(shape_clip(i));
  for (const int64_t i : split.test) test_clips.push_back(shape_clip(i));

  std::vector<AblationRow> rows;
  for (const AblationCell& cell : ablation_grid(cfg.include_appendix)) {
    AblationRow row;
    row.cell = cell;
    row.label = cell_label(cell);
    try {
      ModelConfig mc = cfg.base;
      mc.arch = cell.arch;
      mc.use_fd_input = cell.fd_input;
      mc.use_sd_input = cell.sd_input;
      mc.use_fd_target = cell.fd_target;
      mc.use_sd_target = cell.sd_target;
      // One model seed for the whole grid: layers two cells share start from
      // identical weights, so the cells differ only in what is enabled.
      Model m = build_model(mc, cfg.input_hw, cfg.train.window_t,
                            cfg.model_seed);
      train_model(m, train_clips, cfg.train);
      const EvalOutput ev = evaluate_model(m, test_clips, cfg.eval);
      row.hr_mae = ev.report.hr_mae;
      row.lvet_mae = ev.report.lvet_mae;
    } catch (const Error& e) {
      row.failure = e.code();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void save_ablation_csv(const std::string& path,
                       const std::vector<AblationRow>& rows) {
  std::string out =
      "arch,fd_input,sd_input,fd_target,sd_target,hr_mae_mean,hr_mae_std,"
      "lvet_mae_mean,lvet_mae_std,label,failure\n";
  for (const AblationRow& r : rows) {
    const AblationCell& c = r.cell;
    out += to_string(c.arch);
    for (const bool flag : {c.fd_input, c.sd_input, c.fd_target, c.sd_target}) {
      out += flag ? ",1" : ",0";
    }
    out += ',' + csv_double(r.hr_mae.mean) + ',' + csv_double(r.hr_mae.std) +
           ',' + csv_double(r.lvet_mae.mean) + ',' +
           csv_double(r.lvet_mae.std) + ',' + r.label + ',' + r.failure +
           '\n';
  }
  write_text_atomic(path, out);
}

WaveformSeries waveform_series(const Model& m, const ClipRecord& rec,
                               const EvalConfig& cfg) {
  const ClipSeries truth = truth_series(rec.video.source_ppg);
  const ClipSeries pred = predict_for_record(m, rec, cfg.epsilon);
  WaveformSeries w;
  w.fs = rec.video.source_ppg.fs;
  w.fd_true = truth.fd;
  w.fd_pred = pred.fd;
  w.sd_true = truth.sd;
  w.sd_pred = pred.sd;
  return w;
}

void save_waveforms_csv(const std::string& path, const WaveformSeries& w) {
  std::string out = "sample,fd_true,fd_pred,sd_true,sd_pred\n";
  for (size_t i = 0; i < w.sd_true.size(); ++i) {
    out += std::to_string(i) + ',';
    if (i < w.fd_true.size()) {
      out += csv_double(w.fd_true[i]) + ',' + csv_double(w.fd_pred[i]);
    } else {
      out += ',';
    }
    out += ',' + csv_double(w.sd_true[i]) + ',' + csv_double(w.sd_pred[i]) +
           '\n';
  }
  write_text_atomic(path, out);
}

}  // namespace pulsekit
