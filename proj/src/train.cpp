#include "pulsekit/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "pulsekit/adam.hpp"
#include "pulsekit/errors.hpp"
#include "pulsekit/preprocess.hpp"
#include "pulsekit/rng.hpp"

namespace pulsekit {

TrainResult train_model(Model& model, const std::vector<ClipRecord>& clips,
                        const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (cfg.batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(cfg.lr > 0.0)) throw InvalidArgument("lr must be > 0");

  // Fixed enumeration (clip index, window start); shuffled per epoch.
  std::vector<std::pair<int64_t, int64_t>> windows;
  for (size_t ci = 0; ci < clips.size(); ++ci) {
    const VideoClip& v = clips[ci].video;
    int64_t n = count_windows(v.frames_count, cfg.window_t, cfg.window_stride);
    for (int64_t w = 0; w < n; ++w) {
      windows.emplace_back(static_cast<int64_t>(ci), w * cfg.window_stride);
    }
  }
  if (windows.empty()) throw EmptyDataset("no training windows");

  std::vector<Tensor> params = model.params();
  AdamConfig opt_cfg;
  opt_cfg.lr = cfg.lr;
  Adam opt(params, opt_cfg);

  TrainResult result;
  result.epoch_loss.reserve(static_cast<size_t>(cfg.epochs));
  double best = 0.0;
  uint64_t forward_counter = 0;

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    Rng shuffle_rng(Rng::mix(cfg.seed, 0xE10C + static_cast<uint64_t>(epoch)));
    for (size_t i = windows.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(shuffle_rng.next_u64() % i);
      std::swap(windows[i - 1], windows[j]);
    }

    double epoch_sum = 0.0;
    int64_t batch_index = 0;
    for (size_t pos = 0; pos < windows.size(); pos += cfg.batch_size) {
      const size_t end =
          std::min(windows.size(), pos + static_cast<size_t>(cfg.batch_size));
      zero_grad(params);
      double batch_sum = 0.0;
      for (size_t k = pos; k < end; ++k) {
        const auto& [ci, start] = windows[k];
        TrainingExample ex =
            make_window(clips[static_cast<size_t>(ci)].video, start,
                        cfg.window_t, cfg.epsilon, cfg.standardize_targets);
        const uint64_t drop_seed = Rng::mix(cfg.seed, 0xD0A0 + forward_counter);
        ++forward_counter;
        Tensor loss = compute_loss(
            forward(model, ex, RunMode::train, drop_seed), ex, model.cfg);
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw NonFiniteLoss("non-finite loss in batch " +
                              std::to_string(batch_index) + " of epoch " +
                              std::to_string(epoch));
        }
        batch_sum += value;
        backward(loss);
      }
      const double inv = 1.0 / static_cast<double>(end - pos);
      for (Tensor& p : params) {
        for (double& g : p.grad()) g *= inv;
      }
      opt.step();
      ++result.steps_taken;
      ++batch_index;
      epoch_sum += batch_sum;
    }

    const double mean_loss = epoch_sum / static_cast<double>(windows.size());
    result.epoch_loss.push_back(mean_loss);
    if (epoch == 0 || mean_loss < best) {
      best = mean_loss;
      result.best_epoch = static_cast<size_t>(epoch);
      result.best_params.clear();
      for (const Tensor& p : params) result.best_params.push_back(p.data());
    }
  }
  return result;
}

}  // namespace pulsekit
