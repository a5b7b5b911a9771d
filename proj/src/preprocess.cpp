#include "pulsekit/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "pulsekit/errors.hpp"
#include "pulsekit/signal.hpp"

namespace pulsekit {

namespace {

// In-place (x - mean) / std over the whole buffer, skipped when the buffer is
// numerically constant; then clamp to [-3, 3].
void standardize_and_clamp(std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  double sd = std::sqrt(var);
  if (sd >= 1e-12) {
    for (double& x : v) x = (x - mean) / sd;
  }
  for (double& x : v) x = std::min(std::max(x, -3.0), 3.0);
}

// Per-window target standardization with the same constant-skip rule; the
// frame transforms clamp, targets do not.
void standardize_or_keep(std::vector<double>& v) {
  if (v.empty()) return;
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - mean) * (x - mean);
  var /= static_cast<double>(v.size());
  double sd = std::sqrt(var);
  if (sd < 1e-12) return;
  for (double& x : v) x = (x - mean) / sd;
}

}  // namespace

VideoClip crop_downsample(const VideoClip& clip, int64_t out_h, int64_t out_w) {
  if (out_h < 1 || out_w < 1) throw InvalidArgument("output dims must be >= 1");
  if (clip.frames_count < 1) throw InvalidArgument("clip has no frames");
  const int64_t side = std::min(clip.height, clip.width);
  if (out_h > side || out_w > side) {
    throw UpsampleRequested("output exceeds the center square of the input");
  }
  const int64_t sq_y = (clip.height - side) / 2;
  const int64_t sq_x = (clip.width - side) / 2;
  const int64_t bh = side / out_h;
  const int64_t bw = side / out_w;
  const int64_t y0 = sq_y + (side - out_h * bh) / 2;
  const int64_t x0 = sq_x + (side - out_w * bw) / 2;

  VideoClip out;
  out.frames_count = clip.frames_count;
  out.height = out_h;
  out.width = out_w;
  out.fs = clip.fs;
  out.source_ppg = clip.source_ppg;
  out.saturation_warning = clip.saturation_warning;
  out.saturated_fraction = clip.saturated_fraction;
  out.frames.resize(static_cast<size_t>(clip.frames_count * out_h * out_w * 3));

  const double inv_block = 1.0 / static_cast<double>(bh * bw);
  double* dst = out.frames.data();
  for (int64_t t = 0; t < clip.frames_count; ++t) {
    for (int64_t oy = 0; oy < out_h; ++oy) {
      for (int64_t ox = 0; ox < out_w; ++ox) {
        double acc[3] = {0.0, 0.0, 0.0};
        for (int64_t dy = 0; dy < bh; ++dy) {
          for (int64_t dx = 0; dx < bw; ++dx) {
            for (int64_t c = 0; c < 3; ++c) {
              acc[c] += clip.at(t, y0 + oy * bh + dy, x0 + ox * bw + dx, c);
            }
          }
        }
        for (int64_t c = 0; c < 3; ++c) *dst++ = acc[c] * inv_block;
      }
    }
  }
  return out;
}

FrameTensor normalized_diff_frames(const VideoClip& clip, double epsilon) {
  if (!(epsilon > 0.0)) throw InvalidArgument("epsilon must be > 0");
  if (clip.frames_count < 2) {
    throw SequenceTooShort("need at least 2 frames to difference");
  }
  FrameTensor out;
  out.steps = clip.frames_count - 1;
  out.height = clip.height;
  out.width = clip.width;
  out.values.resize(static_cast<size_t>(out.steps * out.frame_elems()));

  const size_t fe = static_cast<size_t>(out.frame_elems());
  const double* frames = clip.frames.data();
  for (int64_t t = 0; t < out.steps; ++t) {
    const double* a = frames + static_cast<size_t>(t) * fe;
    const double* b = a + fe;
    double* d = out.values.data() + static_cast<size_t>(t) * fe;
    for (size_t i = 0; i < fe; ++i) {
      d[i] = (b[i] - a[i]) / (b[i] + a[i] + epsilon);
    }
  }
  standardize_and_clamp(out.values);
  return out;
}

FrameTensor diff_of_diff_frames(const FrameTensor& fd) {
  if (fd.steps < 2) {
    throw SequenceTooShort("need at least 2 difference frames");
  }
  FrameTensor out;
  out.steps = fd.steps - 1;
  out.height = fd.height;
  out.width = fd.width;
  out.values.resize(static_cast<size_t>(out.steps * out.frame_elems()));

  const size_t fe = static_cast<size_t>(out.frame_elems());
  for (int64_t t = 0; t < out.steps; ++t) {
    const double* a = fd.values.data() + static_cast<size_t>(t) * fe;
    const double* b = a + fe;
    double* d = out.values.data() + static_cast<size_t>(t) * fe;
    for (size_t i = 0; i < fe; ++i) d[i] = b[i] - a[i];
  }
  standardize_and_clamp(out.values);
  return out;
}

TrainingExample make_window(const VideoClip& clip, int64_t start,
                            int64_t t_window, double epsilon,
                            bool standardize_targets) {
  if (t_window < 2) throw InvalidArgument("t_window must be >= 2");
  if (start < 0 || start + t_window + 1 > clip.frames_count) {
    throw ClipTooShort("window needs t_window+1 frames past start");
  }
  const int64_t n_ppg = static_cast<int64_t>(clip.source_ppg.samples.size());
  if (n_ppg != clip.frames_count) {
    throw LengthMismatch("clip ppg is not frame-synchronized");
  }
  const size_t fe =
      static_cast<size_t>(clip.height) * static_cast<size_t>(clip.width) * 3;
  const int64_t s = start;

  VideoClip segment;
  segment.frames_count = t_window + 1;
  segment.height = clip.height;
  segment.width = clip.width;
  segment.fs = clip.fs;
  segment.frames.assign(
      clip.frames.begin() + static_cast<int64_t>(fe) * s,
      clip.frames.begin() + static_cast<int64_t>(fe) * (s + t_window + 1));

  TrainingExample ex;
  ex.fd_frames = normalized_diff_frames(segment, epsilon);
  FrameTensor dd = diff_of_diff_frames(ex.fd_frames);

  ex.raw_frames.steps = t_window;
  ex.raw_frames.height = clip.height;
  ex.raw_frames.width = clip.width;
  ex.raw_frames.values.assign(segment.frames.begin(),
                              segment.frames.begin() +
                                  static_cast<int64_t>(fe) * t_window);

  // Zero front pad restores the stride lost to the second difference.
  ex.sd_frames.steps = t_window;
  ex.sd_frames.height = clip.height;
  ex.sd_frames.width = clip.width;
  ex.sd_frames.values.assign(static_cast<size_t>(t_window) * fe, 0.0);
  std::copy(dd.values.begin(), dd.values.end(),
            ex.sd_frames.values.begin() + static_cast<int64_t>(fe));

  std::vector<double> seg_ppg(
      clip.source_ppg.samples.begin() + s,
      clip.source_ppg.samples.begin() + s + t_window + 1);
  ex.fd_target = first_difference(seg_ppg);
  std::vector<double> sd_tail = second_difference(seg_ppg);
  if (standardize_targets) {
    standardize_or_keep(ex.fd_target);
    standardize_or_keep(sd_tail);
  }
  ex.sd_target.assign(static_cast<size_t>(t_window), 0.0);
  std::copy(sd_tail.begin(), sd_tail.end(), ex.sd_target.begin() + 1);
  return ex;
}

int64_t count_windows(int64_t frames_count, int64_t t_window, int64_t stride) {
  if (frames_count < t_window + 1) return 0;
  return (frames_count - (t_window + 1)) / stride + 1;
}

std::vector<TrainingExample> make_windows(const VideoClip& clip,
                                          int64_t t_window, int64_t stride,
                                          double epsilon,
                                          bool standardize_targets) {
  if (t_window < 2) throw InvalidArgument("t_window must be >= 2");
  if (stride < 1) throw InvalidArgument("stride must be >= 1");
  if (clip.frames_count < t_window + 1) {
    throw ClipTooShort("window needs t_window+1 frames");
  }
  const int64_t n_windows = count_windows(clip.frames_count, t_window, stride);
  std::vector<TrainingExample> out;
  out.reserve(static_cast<size_t>(n_windows));
  for (int64_t w = 0; w < n_windows; ++w) {
    out.push_back(
        make_window(clip, w * stride, t_window, epsilon, standardize_targets));
  }
  return out;
}

}  // namespace pulsekit
