#pragma once

#include <cstdint>
#include <vector>

#include "pulsekit/render.hpp"

namespace pulsekit {

// A time-major stack of H x W x 3 frames, the working currency between the
// difference transforms and the model input pipeline.
struct FrameTensor {
  int64_t steps = 0;
  int64_t height = 0;
  int64_t width = 0;
  std::vector<double> values;  // [steps, H, W, 3]

  double at(int64_t t, int64_t y, int64_t x, int64_t c) const {
    return values[static_cast<size_t>(((t * height + y) * width + x) * 3 + c)];
  }
  int64_t frame_elems() const { return height * width * 3; }
};

// One model-ready window. All three tensors share [T,H,W,3]; index t of
// fd_frames and fd_target comes from the same raw frame pair, index t of
// sd_frames and sd_target from the same raw triple. Index 0 of the sd pair is
// a zero pad (the second difference has one step less than the first).
struct TrainingExample {
  FrameTensor raw_frames;
  FrameTensor fd_frames;
  FrameTensor sd_frames;
  std::vector<double> fd_target;
  std::vector<double> sd_target;
};

// Center-crops to the largest square, then block-means down to out_h x out_w.
// When the square side is not a multiple of the output size, the square is
// trimmed (centered) to the largest multiple first. Throws UpsampleRequested
// when either output dimension exceeds the square side.
VideoClip crop_downsample(const VideoClip& clip, int64_t out_h, int64_t out_w);

// d(t) = (x(t+1) - x(t)) / (x(t+1) + x(t) + epsilon) per pixel per channel,
// then standardized over the whole tensor and clamped to [-3, 3].
// Standardization is skipped when the values are (numerically) constant, so
// an all-zero difference stays all-zero.
FrameTensor normalized_diff_frames(const VideoClip& clip, double epsilon);

// Consecutive subtraction of difference frames (no re-normalization),
// standardized over the whole tensor and clamped to [-3, 3]. One step
// shorter than the input.
FrameTensor diff_of_diff_frames(const FrameTensor& fd);

// One window starting at raw frame `start`. Consumes t_window+1 raw frames:
// the difference stream then has exactly t_window steps, the
// difference-of-difference stream has t_window-1 and is front-padded with one
// zero frame; raw_frames keeps the first t_window. Targets are the matching
// first and second differences of the synchronized PPG, standardized per
// window when standardize_targets is set (the sd pad stays exactly zero: its
// tail is standardized before padding).
TrainingExample make_window(const VideoClip& clip, int64_t start,
                            int64_t t_window, double epsilon,
                            bool standardize_targets = true);

// All windows of a clip on the sliding schedule: starts 0, stride, 2*stride,
// ... while start + t_window + 1 still fits.
std::vector<TrainingExample> make_windows(const VideoClip& clip,
                                          int64_t t_window, int64_t stride,
                                          double epsilon,
                                          bool standardize_targets = true);

// Number of windows make_windows would yield; 0 when the clip is too short.
int64_t count_windows(int64_t frames_count, int64_t t_window, int64_t stride);

}  // namespace pulsekit
