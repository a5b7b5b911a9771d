#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pulsekit/io.hpp"
#include "pulsekit/model.hpp"
#include "pulsekit/render.hpp"
#include "pulsekit/train.hpp"

namespace pulsekit {

// Clip-level train/test split by seeded shuffle. Both sides are nonempty and
// sorted; the same (n, fraction, seed) always yields the same split.
struct SplitIndices {
  std::vector<int64_t> train;
  std::vector<int64_t> test;
};
SplitIndices split_clips(int64_t n_clips, double test_fraction, uint64_t seed);

struct EvalConfig {
  double smooth_window_s = 10.0;  // LVET aggregation window
  double epsilon = 1e-8;          // frame-difference epsilon, as in training
};

struct EvalOutput {
  EvalReport report;
  // Paired per-window LVET values for plotting, clip by clip.
  std::vector<LvetSeriesRow> series;
};

// Runs the model over every clip in back-to-back windows (stride = window, a
// final overlapping window covering the tail) and stitches the per-window
// predictions onto the clip's sample grid: the first-difference series on the
// pair grid, the second-difference series on the aligned grid with zeros at
// positions no window predicts (grid ends and window seams).
//
// Scoring uses the same estimators on both arms so their quantization biases
// cancel: heart rate from the first-difference series when the model emits
// one (from the second-difference series otherwise, against the matching
// truth series), and LVET from fiducials of the second-difference series,
// derived by differencing when the model only emits the first difference.
// Per-window LVET means are paired with the truth by window index.
//
// Clips whose frames do not cover the model input or window length throw
// ShapeMismatch; detector or spectrum failures on a single clip (NoBeatsFound
// and kin) skip that clip and are counted in clips_skipped. Throws
// NoBeatsFound when no clip at all was usable.
EvalOutput evaluate_model(const Model& m, const std::vector<ClipRecord>& clips,
                          const EvalConfig& cfg);

// Self-consistency arm: scores each clip's ground-truth derivative series
// against itself through the same scoring path, so both MAEs are exactly zero
// whenever the truth signal is measurable at all.
EvalOutput evaluate_truth(const std::vector<ClipRecord>& clips,
                          const EvalConfig& cfg);

// One ablation table cell: which derivative streams the model consumes and
// which it is trained to emit.
struct AblationCell {
  Arch arch = Arch::attention;
  bool fd_input = false;
  bool sd_input = false;
  bool fd_target = false;
  bool sd_target = false;
};

// The study grid: per architecture, inputs {FD, FD+SD} crossed with targets
// {FD, SD, FD+SD} (12 cells); with appendix rows, the three SD-input-only
// target variants of the attention architecture are appended.
std::vector<AblationCell> ablation_grid(bool include_appendix);

// "FD-Optimized" for (FD in, FD out), "SD-Optimized" for (FD+SD in, SD out),
// empty otherwise.
std::string cell_label(const AblationCell& cell);

struct AblationRow {
  AblationCell cell;
  std::string label;
  MaeSummary hr_mae;
  MaeSummary lvet_mae;
  std::string failure;  // empty on success, else the error code
};

struct AblationConfig {
  TrainConfig train;      // shared by every cell, seed included
  EvalConfig eval;
  ModelConfig base;       // widths, loss, weights; stream flags come per cell
  int64_t input_hw = 36;
  uint64_t model_seed = 0;  // same for every cell: shared layers start equal
  double test_fraction = 0.2;
  uint64_t split_seed = 0;
  bool include_appendix = false;
};

// Trains and evaluates every grid cell on one shared split. A failing cell
// reports its error code in `failure` and zeroed metrics; remaining cells
// still run. The result depends only on (clips, cfg).
std::vector<AblationRow> run_ablation(const std::vector<ClipRecord>& clips,
                                      const AblationConfig& cfg);

// Ablation table as CSV: the cell flags and both metrics, plus the row label
// ("FD-Optimized"/"SD-Optimized") and the failure code when a cell failed.
void save_ablation_csv(const std::string& path,
                       const std::vector<AblationRow>& rows);

// Stitched prediction next to the generator truth for one clip, for external
// waveform plots. fd lives on the pair grid (length N-1), sd on the aligned
// grid (length N); entry t of either series sits at time t/fs.
struct WaveformSeries {
  double fs = 0.0;
  std::vector<double> fd_true, fd_pred;
  std::vector<double> sd_true, sd_pred;
};
WaveformSeries waveform_series(const Model& m, const ClipRecord& rec,
                               const EvalConfig& cfg);

// CSV with columns sample,fd_true,fd_pred,sd_true,sd_pred; the fd columns go
// empty on the last row, one sample shorter than the sd grid.
void save_waveforms_csv(const std::string& path, const WaveformSeries& w);

}  // namespace pulsekit
