#include "pulsekit/render.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "pulsekit/errors.hpp"
#include "pulsekit/rng.hpp"

namespace pulsekit {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

void check_params(const DrmParams& p, int64_t height, int64_t width) {
  if (!(p.illumination > 0.0)) {
    throw InvalidArgument("illumination must be > 0");
  }
  double n2 = p.skin_color[0] * p.skin_color[0] +
              p.skin_color[1] * p.skin_color[1] +
              p.skin_color[2] * p.skin_color[2];
  if (std::abs(std::sqrt(n2) - 1.0) > 1e-9) {
    throw InvalidArgument("skin_color must be unit-norm");
  }
  if (!(p.noise_sigma >= 0.0)) throw InvalidArgument("noise_sigma must be >= 0");
  if (!(p.specular_amp >= 0.0)) throw InvalidArgument("specular_amp must be >= 0");
  if (!(p.specular_freq >= 0.0)) throw InvalidArgument("specular_freq must be >= 0");
  if (!(p.motion_amp >= 0.0)) throw InvalidArgument("motion_amp must be >= 0");
  if (!(p.motion_freq >= 0.0)) throw InvalidArgument("motion_freq must be >= 0");
  const Rect& r = p.skin_region;
  if (r.y0 < 0 || r.x0 < 0 || r.h < 1 || r.w < 1 || r.y0 + r.h > height ||
      r.x0 + r.w > width) {
    throw RegionOutOfBounds("skin_region must lie inside the frame");
  }
}

// Bilinear read of the static skin mask with edge clamp. Integer coordinates
// reproduce the stored mask values exactly (all interpolation weights are
// then 0 or 1), so zero motion leaves the mask bitwise intact.
double sample_mask(const std::vector<double>& mask, int64_t h, int64_t w,
                   double y, double x) {
  y = std::min(std::max(y, 0.0), static_cast<double>(h - 1));
  x = std::min(std::max(x, 0.0), static_cast<double>(w - 1));
  int64_t y0 = static_cast<int64_t>(y);
  int64_t x0 = static_cast<int64_t>(x);
  int64_t y1 = std::min(y0 + 1, h - 1);
  int64_t x1 = std::min(x0 + 1, w - 1);
  double fy = y - static_cast<double>(y0);
  double fx = x - static_cast<double>(x0);
  const double* m = mask.data();
  double top = m[y0 * w + x0] * (1.0 - fx) + m[y0 * w + x1] * fx;
  double bot = m[y1 * w + x0] * (1.0 - fx) + m[y1 * w + x1] * fx;
  return top * (1.0 - fy) + bot * fy;
}

}  // namespace

VideoClip render_clip(const PpgSignal& ppg, const DrmParams& params,
                      int64_t height, int64_t width, uint64_t seed) {
  if (!ppg.normalized) {
    throw InvalidArgument("render_clip needs an amplitude-normalized ppg");
  }
  if (ppg.samples.empty()) throw InvalidArgument("ppg has no samples");
  if (!(ppg.fs > 0.0)) throw InvalidArgument("ppg.fs must be > 0");
  if (height < 4 || width < 4) {
    throw InvalidArgument("frame must be at least 4x4");
  }
  check_params(params, height, width);

  const int64_t t_count = static_cast<int64_t>(ppg.samples.size());
  VideoClip clip;
  clip.frames_count = t_count;
  clip.height = height;
  clip.width = width;
  clip.fs = ppg.fs;
  clip.source_ppg = ppg;
  clip.frames.resize(static_cast<size_t>(t_count * height * width * 3));

  std::vector<double> mask(static_cast<size_t>(height * width), 0.0);
  const Rect& r = params.skin_region;
  for (int64_t y = r.y0; y < r.y0 + r.h; ++y) {
    for (int64_t x = r.x0; x < r.x0 + r.w; ++x) {
      mask[static_cast<size_t>(y * width + x)] = 1.0;
    }
  }

  const double I = params.illumination;
  double bg[3];
  for (int c = 0; c < 3; ++c) {
    bg[c] = I * (params.background_color[c] * params.stationary_strength);
  }

  Rng rng(seed);
  const double sigma = params.noise_sigma;
  int64_t skin_samples = 0;
  int64_t clamped_skin_samples = 0;
  double* out = clip.frames.data();

  for (int64_t t = 0; t < t_count; ++t) {
    const double ts = static_cast<double>(t) / ppg.fs;
    const double vs =
        params.specular_amp * 0.5 *
        (1.0 + std::sin(kTwoPi * params.specular_freq * ts));
    const double p = ppg.samples[static_cast<size_t>(t)];
    double skin[3];
    for (int c = 0; c < 3; ++c) {
      skin[c] = I * (vs + params.skin_color[c] * params.stationary_strength +
                     params.pulsatile_color[c] * p);
    }
    const double phase = kTwoPi * params.motion_freq * ts;
    const double dx = params.motion_amp * std::sin(phase);
    const double dy = params.motion_amp * std::cos(phase);

    for (int64_t y = 0; y < height; ++y) {
      for (int64_t x = 0; x < width; ++x) {
        const double m =
            sample_mask(mask, height, width, static_cast<double>(y) - dy,
                        static_cast<double>(x) - dx);
        const bool on_skin = m > 0.5;
        for (int c = 0; c < 3; ++c) {
          // Noise is drawn unconditionally so the same seed yields the same
          // noise field at every sigma, including sigma = 0.
          const double z = rng.normal();
          double v = m * skin[c] + (1.0 - m) * bg[c] + sigma * z;
          double clamped = std::min(std::max(v, 0.0), 1.0);
          if (on_skin) {
            ++skin_samples;
            if (clamped != v) ++clamped_skin_samples;
          }
          *out++ = clamped;
        }
      }
    }
  }

  if (skin_samples > 0) {
    clip.saturated_fraction = static_cast<double>(clamped_skin_samples) /
                              static_cast<double>(skin_samples);
  }
  clip.saturation_warning = clip.saturated_fraction > 0.01;
  return clip;
}

namespace {

void check_interval(const Interval& iv, double domain_lo, double domain_hi,
                    const char* name) {
  if (!std::isfinite(iv.lo) || !std::isfinite(iv.hi) || iv.lo > iv.hi ||
      iv.lo < domain_lo || iv.hi > domain_hi) {
    throw InvalidRange(std::string("bad sampling interval for ") + name);
  }
}

}  // namespace

std::vector<ClipRecord> make_dataset(int64_t n_clips,
                                     const SamplerRanges& ranges,
                                     int64_t height, int64_t width, double fs,
                                     double duration_s, uint64_t seed) {
  if (n_clips < 1) throw InvalidArgument("n_clips must be >= 1");
  if (height < 4 || width < 4) {
    throw InvalidArgument("frame must be at least 4x4");
  }
  if (!(fs > 0.0)) throw InvalidArgument("fs must be > 0");
  if (!(duration_s > 0.0)) throw InvalidArgument("duration_s must be > 0");
  // Domain bounds mirror what synth_ppg and render_clip will accept, so a bad
  // range fails here as InvalidRange instead of mid-generation.
  check_interval(ranges.hr_bpm, 30.0, 240.0, "hr_bpm");
  check_interval(ranges.hr_jitter, 0.0, 0.3, "hr_jitter");
  check_interval(ranges.systolic_width, 0.05, 0.45, "systolic_width");
  check_interval(ranges.dicrotic_amp, 0.0, 1.0, "dicrotic_amp");
  check_interval(ranges.pulse_scale, 0.0, 10.0, "pulse_scale");
  check_interval(ranges.noise_sigma, 0.0, 1.0, "noise_sigma");
  check_interval(ranges.specular_amp, 0.0, 1.0, "specular_amp");
  check_interval(ranges.motion_amp, 0.0, 4.0, "motion_amp");

  std::vector<ClipRecord> records;
  records.reserve(static_cast<size_t>(n_clips));
  for (int64_t i = 0; i < n_clips; ++i) {
    const uint64_t clip_seed = Rng::mix(seed, static_cast<uint64_t>(i));
    Rng rng(clip_seed);
    const double hr = rng.uniform(ranges.hr_bpm.lo, ranges.hr_bpm.hi);
    const double jitter = rng.uniform(ranges.hr_jitter.lo, ranges.hr_jitter.hi);
    const double sys_w =
        rng.uniform(ranges.systolic_width.lo, ranges.systolic_width.hi);
    const double dic_a =
        rng.uniform(ranges.dicrotic_amp.lo, ranges.dicrotic_amp.hi);
    const double pulse_scale =
        rng.uniform(ranges.pulse_scale.lo, ranges.pulse_scale.hi);
    const double noise = rng.uniform(ranges.noise_sigma.lo, ranges.noise_sigma.hi);
    const double spec = rng.uniform(ranges.specular_amp.lo, ranges.specular_amp.hi);
    const double motion = rng.uniform(ranges.motion_amp.lo, ranges.motion_amp.hi);
    const uint64_t synth_seed = rng.next_u64();
    const uint64_t render_seed = rng.next_u64();

    BeatTemplateParams tpl;
    tpl.systolic_width = sys_w;
    tpl.dicrotic_amp = dic_a;
    SynthPpg synth = synth_ppg(hr, fs, duration_s, jitter, tpl, synth_seed);

    DrmParams p;
    p.noise_sigma = noise;
    p.specular_amp = spec;
    p.motion_amp = motion;
    for (int c = 0; c < 3; ++c) p.pulsatile_color[c] *= pulse_scale;
    // Margin-4 skin patch, shrunk on tiny frames so the patch stays nonempty.
    const int64_t margin = std::min<int64_t>(4, std::min(height, width) / 4);
    p.skin_region =
        Rect{margin, margin, height - 2 * margin, width - 2 * margin};

    ClipRecord rec;
    rec.video = render_clip(synth.ppg, p, height, width, render_seed);
    rec.fiducials = synth.fiducials;
    rec.hr_bpm = hr;
    rec.params = ClipParams{clip_seed, hr,    jitter, sys_w, dic_a,
                            pulse_scale, noise, spec, motion};
    records.push_back(std::move(rec));
  }
  return records;
}

}  // namespace pulsekit
