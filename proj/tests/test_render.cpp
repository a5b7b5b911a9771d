#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "pulsekit/errors.hpp"
#include "pulsekit/render.hpp"
#include "pulsekit/signal.hpp"

using namespace pulsekit;

namespace {

PpgSignal constant_ppg(int64_t n, double value, double fs) {
  PpgSignal p;
  p.samples.assign(static_cast<size_t>(n), value);
  p.fs = fs;
  p.normalized = true;
  return p;
}

// Second difference straight from its definition, independent of how the
// library composes it.
std::vector<double> sd_direct(const std::vector<double>& x) {
  std::vector<double> out;
  for (size_t i = 0; i + 2 < x.size(); ++i) {
    out.push_back(x[i + 2] - 2.0 * x[i + 1] + x[i]);
  }
  return out;
}

std::vector<double> pixel_series(const VideoClip& clip, int64_t y, int64_t x,
                                 int64_t c) {
  std::vector<double> out;
  for (int64_t t = 0; t < clip.frames_count; ++t) out.push_back(clip.at(t, y, x, c));
  return out;
}

DrmParams quiet_params(int64_t height, int64_t width) {
  DrmParams p;
  p.noise_sigma = 0.0;
  p.specular_amp = 0.0;
  p.motion_amp = 0.0;
  p.skin_region = Rect{2, 2, height - 4, width - 4};
  return p;
}

}  // namespace

TEST_CASE("skin pixel value matches the reflection formula") {
  // Known-by-hand point: I=1, u_d=(1,0,0), d0=0.5, u_p=0.1 per channel,
  // p(t)=0.2, no specular/noise -> channel 0 reads 0.5*1 + 0.1*0.2 = 0.52.
  DrmParams p = quiet_params(4, 4);
  p.illumination = 1.0;
  p.skin_color[0] = 1.0;
  p.skin_color[1] = 0.0;
  p.skin_color[2] = 0.0;
  p.stationary_strength = 0.5;
  p.pulsatile_color[0] = 0.1;
  p.pulsatile_color[1] = 0.1;
  p.pulsatile_color[2] = 0.1;
  p.skin_region = Rect{1, 1, 2, 2};
  VideoClip clip = render_clip(constant_ppg(5, 0.2, 30.0), p, 4, 4, 11);

  CHECK(clip.frames_count == 5);
  CHECK(clip.height == 4);
  CHECK(clip.width == 4);
  CHECK(std::abs(clip.at(0, 1, 1, 0) - 0.52) < 1e-12);
  CHECK(std::abs(clip.at(0, 1, 1, 1) - 0.02) < 1e-12);
  CHECK(std::abs(clip.at(0, 1, 1, 2) - 0.02) < 1e-12);
  CHECK(std::abs(clip.at(3, 2, 2, 0) - 0.52) < 1e-12);
  // Background pixel: I * bg_color * d0 with the default background color.
  CHECK(std::abs(clip.at(0, 0, 0, 0) - 0.05) < 1e-12);
  CHECK(std::abs(clip.at(0, 0, 0, 1) - 0.075) < 1e-12);
  CHECK(std::abs(clip.at(0, 0, 0, 2) - 0.25) < 1e-12);
  CHECK_FALSE(clip.saturation_warning);
}

TEST_CASE("constant pulse and quiet optics give identical frames") {
  DrmParams p = quiet_params(6, 6);
  VideoClip clip = render_clip(constant_ppg(8, 0.4, 30.0), p, 6, 6, 3);
  const size_t frame = static_cast<size_t>(6 * 6 * 3);
  for (int64_t t = 1; t < clip.frames_count; ++t) {
    CHECK(std::memcmp(clip.frames.data(),
                      clip.frames.data() + static_cast<size_t>(t) * frame,
                      frame * sizeof(double)) == 0);
  }
}

TEST_CASE("pixel second difference isolates the pulse second difference") {
  // With constant illumination and no specular, motion, or noise, everything
  // except the pulsatile term cancels under double differencing:
  // dd C_k = I * u_p[k] * dd p.
  SynthPpg synth = synth_ppg(72.0, 30.0, 4.0, 0.03, BeatTemplateParams{}, 7);
  DrmParams p = quiet_params(8, 8);
  VideoClip clip = render_clip(synth.ppg, p, 8, 8, 19);
  CHECK_FALSE(clip.saturation_warning);

  std::vector<double> dd_p = sd_direct(synth.ppg.samples);
  double worst = 0.0;
  for (int64_t y : {2, 4, 5}) {
    for (int64_t x : {2, 3, 5}) {
      for (int64_t c = 0; c < 3; ++c) {
        std::vector<double> dd_pix = sd_direct(pixel_series(clip, y, x, c));
        REQUIRE(dd_pix.size() == dd_p.size());
        const double gain = p.illumination * p.pulsatile_color[c];
        for (size_t i = 0; i < dd_pix.size(); ++i) {
          worst = std::max(worst, std::abs(dd_pix[i] - gain * dd_p[i]));
        }
      }
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("specular and motion do not leak into far background pixels") {
  SynthPpg synth = synth_ppg(80.0, 30.0, 3.0, 0.02, BeatTemplateParams{}, 21);
  DrmParams p;
  p.noise_sigma = 0.0;
  p.specular_amp = 0.3;
  p.motion_amp = 0.6;
  p.skin_region = Rect{6, 6, 6, 6};
  VideoClip clip = render_clip(synth.ppg, p, 18, 18, 5);
  // (0,0) and (17,17) stay >1px away from the warped patch at amp 0.6.
  for (int64_t t = 1; t < clip.frames_count; ++t) {
    for (int64_t c = 0; c < 3; ++c) {
      CHECK(clip.at(t, 0, 0, c) == clip.at(0, 0, 0, c));
      CHECK(clip.at(t, 17, 17, c) == clip.at(0, 17, 17, c));
    }
  }
}

TEST_CASE("motion moves patch edges but leaves the interior on formula") {
  PpgSignal ppg = constant_ppg(40, 0.3, 30.0);
  DrmParams still = quiet_params(16, 16);
  still.skin_region = Rect{5, 5, 6, 6};
  DrmParams moving = still;
  moving.motion_amp = 0.6;
  VideoClip a = render_clip(ppg, still, 16, 16, 9);
  VideoClip b = render_clip(ppg, moving, 16, 16, 9);

  CHECK(a.frames != b.frames);
  double expected0 = still.illumination *
                     (still.skin_color[0] * still.stationary_strength +
                      still.pulsatile_color[0] * 0.3);
  for (int64_t t = 0; t < b.frames_count; ++t) {
    // Patch center is further than motion_amp+1 from the boundary, so the
    // warped mask is an interpolation of all-ones there.
    CHECK(std::abs(b.at(t, 8, 8, 0) - expected0) < 1e-12);
    for (size_t i = 0; i < b.frames.size(); ++i) {
      REQUIRE(b.frames[i] >= 0.0);
      REQUIRE(b.frames[i] <= 1.0);
    }
  }
}

TEST_CASE("noise power in the background rises with sigma") {
  PpgSignal ppg = constant_ppg(60, 0.5, 30.0);
  double previous = -1.0;
  for (double sigma : {0.002, 0.005, 0.01}) {
    DrmParams p = quiet_params(8, 8);
    p.noise_sigma = sigma;
    VideoClip clip = render_clip(ppg, p, 8, 8, 77);
    double acc = 0.0;
    int64_t n = 0;
    for (int64_t y : {0, 1}) {
      for (int64_t x = 0; x < 8; ++x) {
        if (y >= 2 && y < 6 && x >= 2 && x < 6) continue;
        for (int64_t c = 0; c < 3; ++c) {
          for (double v : sd_direct(pixel_series(clip, y, x, c))) {
            acc += v * v;
            ++n;
          }
        }
      }
    }
    double msd = acc / static_cast<double>(n);
    CHECK(msd > previous);
    previous = msd;
  }
}

TEST_CASE("same seed and arguments render bitwise identical clips") {
  SynthPpg synth = synth_ppg(64.0, 30.0, 2.0, 0.05, BeatTemplateParams{}, 2);
  DrmParams p = quiet_params(8, 8);
  p.noise_sigma = 0.01;
  p.specular_amp = 0.1;
  p.motion_amp = 0.4;
  VideoClip a = render_clip(synth.ppg, p, 8, 8, 123);
  VideoClip b = render_clip(synth.ppg, p, 8, 8, 123);
  CHECK(a.frames == b.frames);
  VideoClip c = render_clip(synth.ppg, p, 8, 8, 124);
  CHECK(a.frames != c.frames);
}

TEST_CASE("saturation is counted on skin and flagged past one percent") {
  DrmParams p = quiet_params(6, 6);
  p.illumination = 1.0;
  p.skin_color[0] = 1.0;
  p.skin_color[1] = 0.0;
  p.skin_color[2] = 0.0;
  p.stationary_strength = 1.5;  // channel 0 of every skin pixel lands at 1.5
  p.pulsatile_color[0] = p.pulsatile_color[1] = p.pulsatile_color[2] = 0.0;
  VideoClip clip = render_clip(constant_ppg(10, 0.2, 30.0), p, 6, 6, 4);
  CHECK(clip.saturation_warning);
  CHECK(std::abs(clip.saturated_fraction - 1.0 / 3.0) < 1e-12);
  for (double v : clip.frames) {
    REQUIRE(v >= 0.0);
    REQUIRE(v <= 1.0);
  }

  DrmParams clean = quiet_params(6, 6);
  VideoClip ok = render_clip(constant_ppg(10, 0.2, 30.0), clean, 6, 6, 4);
  CHECK_FALSE(ok.saturation_warning);
  CHECK(ok.saturated_fraction == 0.0);
}

TEST_CASE("render_clip rejects bad inputs") {
  PpgSignal raw = constant_ppg(6, 0.2, 30.0);

  PpgSignal unnorm = raw;
  unnorm.normalized = false;
  CHECK_THROWS_AS(render_clip(unnorm, quiet_params(6, 6), 6, 6, 1),
                  InvalidArgument);

  PpgSignal empty;
  empty.fs = 30.0;
  empty.normalized = true;
  CHECK_THROWS_AS(render_clip(empty, quiet_params(6, 6), 6, 6, 1),
                  InvalidArgument);

  PpgSignal no_fs = raw;
  no_fs.fs = 0.0;
  CHECK_THROWS_AS(render_clip(no_fs, quiet_params(6, 6), 6, 6, 1),
                  InvalidArgument);

  CHECK_THROWS_AS(render_clip(raw, quiet_params(6, 6), 3, 6, 1),
                  InvalidArgument);

  DrmParams dim = quiet_params(6, 6);
  dim.illumination = 0.0;
  CHECK_THROWS_AS(render_clip(raw, dim, 6, 6, 1), InvalidArgument);

  DrmParams skew = quiet_params(6, 6);
  skew.skin_color[0] = 0.9;
  skew.skin_color[1] = 0.9;
  skew.skin_color[2] = 0.9;
  CHECK_THROWS_AS(render_clip(raw, skew, 6, 6, 1), InvalidArgument);

  DrmParams noisy = quiet_params(6, 6);
  noisy.noise_sigma = -0.01;
  CHECK_THROWS_AS(render_clip(raw, noisy, 6, 6, 1), InvalidArgument);

  for (Rect r : {Rect{4, 4, 4, 4}, Rect{-1, 0, 3, 3}, Rect{0, 0, 0, 2},
                 Rect{0, 5, 2, 2}}) {
    DrmParams oob = quiet_params(6, 6);
    oob.skin_region = r;
    CHECK_THROWS_AS(render_clip(raw, oob, 6, 6, 1), RegionOutOfBounds);
  }
}

TEST_CASE("dataset sampling stays inside the requested heart rate range") {
  SamplerRanges ranges;
  ranges.hr_bpm = Interval{50.0, 120.0};
  std::vector<ClipRecord> ds = make_dataset(100, ranges, 4, 4, 30.0, 2.0, 42);
  REQUIRE(ds.size() == 100);
  double lo = 1e9;
  double hi = -1e9;
  for (const ClipRecord& rec : ds) {
    REQUIRE(rec.hr_bpm >= 50.0);
    REQUIRE(rec.hr_bpm <= 120.0);
    lo = std::min(lo, rec.hr_bpm);
    hi = std::max(hi, rec.hr_bpm);
    REQUIRE(rec.video.frames_count == 60);
    REQUIRE(!rec.fiducials.diastolic_idx.empty());
    REQUIRE(rec.fiducials.notch_idx.size() == rec.fiducials.diastolic_idx.size());
  }
  // 100 uniform draws from a 70bpm span essentially surely spread this wide.
  CHECK(lo < 65.0);
  CHECK(hi > 105.0);
}

TEST_CASE("each dataset clip depends only on the seed and its index") {
  SamplerRanges ranges;
  std::vector<ClipRecord> five = make_dataset(5, ranges, 8, 8, 30.0, 2.0, 9);
  std::vector<ClipRecord> three = make_dataset(3, ranges, 8, 8, 30.0, 2.0, 9);
  REQUIRE(five.size() == 5);
  REQUIRE(three.size() == 3);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(five[i].hr_bpm == three[i].hr_bpm);
    CHECK(five[i].video.frames == three[i].video.frames);
    CHECK(five[i].fiducials.diastolic_idx == three[i].fiducials.diastolic_idx);
    CHECK(five[i].fiducials.notch_idx == three[i].fiducials.notch_idx);
  }
  std::vector<ClipRecord> again = make_dataset(5, ranges, 8, 8, 30.0, 2.0, 9);
  for (size_t i = 0; i < 5; ++i) {
    CHECK(five[i].video.frames == again[i].video.frames);
  }
}

TEST_CASE("make_dataset rejects malformed ranges and arguments") {
  SamplerRanges flipped;
  flipped.hr_bpm = Interval{120.0, 50.0};
  CHECK_THROWS_AS(make_dataset(2, flipped, 8, 8, 30.0, 1.0, 1), InvalidRange);

  SamplerRanges negative;
  negative.noise_sigma = Interval{-0.1, 0.1};
  CHECK_THROWS_AS(make_dataset(2, negative, 8, 8, 30.0, 1.0, 1), InvalidRange);

  SamplerRanges wild;
  wild.hr_jitter = Interval{0.0, 0.9};
  CHECK_THROWS_AS(make_dataset(2, wild, 8, 8, 30.0, 1.0, 1), InvalidRange);

  SamplerRanges ok;
  CHECK_THROWS_AS(make_dataset(0, ok, 8, 8, 30.0, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(make_dataset(2, ok, 2, 8, 30.0, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(make_dataset(2, ok, 8, 8, -30.0, 1.0, 1), InvalidArgument);
  CHECK_THROWS_AS(make_dataset(2, ok, 8, 8, 30.0, 0.0, 1), InvalidArgument);
}
