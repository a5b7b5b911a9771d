#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pulsekit/signal.hpp"

namespace pulsekit {

struct MaeSummary {
  double mean = 0.0;
  double std = 0.0;  // population std of the absolute errors
};

struct BlandAltman {
  double mean_diff = 0.0;
  double lower_limit = 0.0;  // mean_diff - 1.96 * std of differences
  double upper_limit = 0.0;  // mean_diff + 1.96 * std of differences
  std::vector<std::pair<double, double>> points;  // (truth, pred - truth)
};

struct EvalReport {
  std::vector<double> hr_true;  // per clip, BPM
  std::vector<double> hr_pred;
  std::vector<double> lvet_true;  // per smoothing window, ms, paired
  std::vector<double> lvet_pred;
  MaeSummary hr_mae;
  MaeSummary lvet_mae;
  BlandAltman ba_hr;
  BlandAltman ba_lvet;
  int64_t clips_evaluated = 0;
  int64_t clips_skipped = 0;  // per-clip detector failures, not fatal
};

// Dominant cardiac frequency of the mean-removed signal, from the
// periodogram restricted to [0.75, 4.0] Hz, in BPM. Ties resolve to the
// lowest frequency bin.
double estimate_hr(const std::vector<double>& signal, double fs);

// Second difference placed on the grid of the signal it derives from:
// out[t] = x[t+1] - 2 x[t] + x[t-1] for 1 <= t <= n-2, zero at both ends,
// same length as x. Detector input and model predictions share this frame.
std::vector<double> aligned_second_difference(const std::vector<double>& x);

// Detector knobs. Not physiological constants; defaults tuned so the clean
// generator suite passes with margin.
struct FiducialConfig {
  double anchor_prominence_frac = 0.3;   // of the largest peak prominence
  double anchor_separation_beats = 0.5;  // of one beat period
  double notch_refractory_beats = 0.08;  // of one beat period
  double notch_prominence_frac = 0.25;   // noise-ripple floor for candidates
  // The sd of a dicrotic waveform carries two positive peaks per beat, at
  // the diastolic foot and at the notch. The diastolic one is identified by
  // the gap to the next prominent peak: with the notch inside the first half
  // of the beat the post-diastolic segment is the short one, so the default
  // is false; set true for waveforms whose notch sits past mid-beat.
  bool diastolic_before_long_gap = false;
};

// Beat fiducials from a second-derivative sequence. Diastolic anchors are
// prominent sd peaks (prominence and separation gated by the beat period
// from hr_hint_bpm, or estimated from sd when the hint is <= 0); the
// dicrotic notch is the earliest remaining sd peak after a refractory gap.
// Returned indices live on the sd grid (== raw grid of the source signal).
// Beats with no notch candidate are dropped.
Fiducials detect_fiducials(const std::vector<double>& sd, double fs,
                           double hr_hint_bpm = 0.0,
                           const FiducialConfig& cfg = {});

// Per-beat LVET grouped by the non-overlapping smoothing window each beat's
// diastolic point falls in: (window index, mean LVET ms), windows with no
// beats omitted.
std::vector<std::pair<int64_t, double>> lvet_windows(const Fiducials& fid,
                                                     double fs,
                                                     double smooth_window_s);

// The window means alone, in window order.
std::vector<double> lvet_series(const Fiducials& fid, double fs,
                                double smooth_window_s = 10.0);

MaeSummary mae_summary(const std::vector<double>& pred,
                       const std::vector<double>& truth);

BlandAltman bland_altman(const std::vector<double>& pred,
                         const std::vector<double>& truth);

}  // namespace pulsekit
