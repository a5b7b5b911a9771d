#pragma once

#include <cstdint>
#include <vector>

#include "pulsekit/signal.hpp"

namespace pulsekit {

struct Rect {
  int64_t y0 = 0;
  int64_t x0 = 0;
  int64_t h = 0;
  int64_t w = 0;
};

// Reflection-model parameters for one clip. Per-pixel intensity on skin is
//   C_k(t) = I * (v_s(t) + u_d[k]*d0 + u_p[k]*p(t)) + n(t)
// with v_s a sinusoidal specular term shared across channels, and background
// pixels I * (background_color[k]*d0) + n(t). Illumination I is constant for
// the whole clip.
struct DrmParams {
  double illumination = 0.75;  // I, must be > 0
  // Unit-norm skin color direction (|u_d| = 1 within 1e-9).
  double skin_color[3] = {0.70175658996391965, 0.55138017782879412,
                          0.451129236405377};
  double stationary_strength = 0.80;  // d0
  double pulsatile_color[3] = {0.008, 0.020, 0.012};  // u_p
  double background_color[3] = {0.10, 0.15, 0.50};
  double noise_sigma = 0.0;
  double specular_amp = 0.0;   // peak of v_s(t)
  double specular_freq = 0.35;  // Hz
  double motion_amp = 0.0;   // pixels
  double motion_freq = 0.25;  // Hz
  Rect skin_region;  // set by render_clip caller; must lie inside the frame
};

struct VideoClip {
  int64_t frames_count = 0;  // T
  int64_t height = 0;
  int64_t width = 0;
  double fs = 0.0;
  std::vector<double> frames;  // [T,H,W,3], row-major, values in [0,1]
  PpgSignal source_ppg;
  // Saturation bookkeeping: fraction of skin samples that hit the clamp.
  bool saturation_warning = false;
  double saturated_fraction = 0.0;

  double at(int64_t t, int64_t y, int64_t x, int64_t c) const {
    return frames[static_cast<size_t>(
        ((t * height + y) * width + x) * 3 + c)];
  }
};

// The sampled knobs behind one dataset clip, kept so a manifest row can trace
// a clip back to its generator inputs. seed is the per-clip stream seed, which
// is enough to re-render the clip without the rest of the dataset.
struct ClipParams {
  uint64_t seed = 0;
  double hr_bpm = 0.0;
  double hr_jitter = 0.0;
  double systolic_width = 0.0;
  double dicrotic_amp = 0.0;
  double pulse_scale = 0.0;
  double noise_sigma = 0.0;
  double specular_amp = 0.0;
  double motion_amp = 0.0;
};

// A dataset entry: the rendered clip plus the ground truth that produced it.
struct ClipRecord {
  VideoClip video;
  Fiducials fiducials;
  double hr_bpm = 0.0;
  ClipParams params;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

// Per-clip sampling intervals for make_dataset. Every value is drawn
// uniformly from its interval, independently per clip.
struct SamplerRanges {
  Interval hr_bpm{55.0, 115.0};
  Interval hr_jitter{0.02, 0.06};
  Interval systolic_width{0.22, 0.26};
  Interval dicrotic_amp{0.38, 0.52};
  Interval pulse_scale{0.8, 1.25};   // scales pulsatile_color
  Interval noise_sigma{0.003, 0.010};
  Interval specular_amp{0.05, 0.15};
  Interval motion_amp{0.0, 0.7};
};

// Renders one clip; one frame per PPG sample. The PPG must be
// amplitude-normalized. Pixel values are clamped to [0,1]; if more than 1% of
// skin samples clamp, the clip's saturation_warning is set (clamping breaks
// the second-difference identity, so it is surfaced rather than hidden).
VideoClip render_clip(const PpgSignal& ppg, const DrmParams& params,
                      int64_t height, int64_t width, uint64_t seed);

// Renders n_clips clips with independently sampled pulse and reflection
// parameters, each derived from its own sub-seed so the result depends only
// on (arguments, seed).
std::vector<ClipRecord> make_dataset(int64_t n_clips,
                                     const SamplerRanges& ranges,
                                     int64_t height, int64_t width, double fs,
                                     double duration_s, uint64_t seed);

}  // namespace pulsekit
