#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace pulsekit {

struct PpgSignal {
  std::vector<double> samples;
  double fs = 0.0;
  bool normalized = false;
};

// Per-beat fiducial indices on the sample grid of the signal they were
// measured on. Entry i of each vector belongs to beat i: diastolic_idx is
// strictly increasing, notch_idx[i] > diastolic_idx[i], and
// lvet_ms[i] = (notch_idx[i] - diastolic_idx[i]) / fs * 1000.
struct Fiducials {
  std::vector<int64_t> diastolic_idx;
  std::vector<int64_t> notch_idx;
  std::vector<double> lvet_ms;
};

// One beat is a baseline plus two raised-cosine bumps (systolic wave and
// dicrotic wave). Centers and widths are fractions of the beat period; width
// is the bump half-support. The systolic tail overlaps the dicrotic rise so
// the notch is a sharp V, while the dicrotic tail dies out before the next
// upstroke, leaving a flat diastolic foot. The default bump spacing of 0.30
// of a period stays well away from half a period: bumps half a period apart
// reinforce the second harmonic until it rivals the fundamental in the
// periodogram, which would break spectral rate estimates on clean input.
struct BeatTemplateParams {
  double systolic_amp = 1.0;
  double systolic_center = 0.24;
  double systolic_width = 0.24;
  double dicrotic_amp = 0.45;
  double dicrotic_center = 0.54;
  double dicrotic_width = 0.26;
  double baseline = 0.05;
};

struct SynthPpg {
  PpgSignal ppg;
  Fiducials fiducials;
};

// y[i] = x[i+1] - x[i]; output is one sample shorter than the input.
std::vector<double> first_difference(const std::vector<double>& x);

// first_difference applied twice; output is two samples shorter.
std::vector<double> second_difference(const std::vector<double>& x);

// (x - mean) / population std. Throws ConstantInput when std < 1e-12.
std::vector<double> standardize(const std::vector<double>& x);

// Renders round(duration_s*fs) samples of a beat train whose per-beat period
// is 60/hr_bpm jittered by a uniform factor in [-hr_jitter, +hr_jitter], then
// scans the clean waveform for per-beat fiducials:
//   diastolic = argmin over (previous dicrotic center, systolic center],
//   notch     = argmin over (systolic center, dicrotic center],
// with argmin ties broken toward the last sample so a flat diastole resolves
// to the upstroke foot. Output is amplitude-normalized to [0,1].
SynthPpg synth_ppg(double hr_bpm, double fs, double duration_s,
                   double hr_jitter, const BeatTemplateParams& params,
                   uint64_t seed);

// Reads a two-column CSV "time_s,ppg" (header required, time strictly
// increasing) and resamples onto a uniform grid via linear interpolation.
PpgSignal load_ppg_csv(const std::string& path, double target_fs);

}  // namespace pulsekit
