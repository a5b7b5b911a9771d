#pragma once

#include <cstdint>
#include <vector>

#include "pulsekit/model.hpp"
#include "pulsekit/render.hpp"

namespace pulsekit {

struct TrainConfig {
  int64_t epochs = 8;
  int64_t batch_size = 16;
  double lr = 0.001;
  int64_t window_t = 30;
  int64_t window_stride = 15;
  double epsilon = 1e-8;
  bool standardize_targets = true;
  uint64_t seed = 0;
};

struct TrainResult {
  std::vector<double> epoch_loss;  // mean training loss, one entry per epoch
  int64_t steps_taken = 0;         // optimizer steps over the whole run
  size_t best_epoch = 0;           // index into epoch_loss of the minimum
  // Parameter values (in named_params order) snapshotted after the best
  // epoch, so the caller can emit a best checkpoint alongside the final one.
  std::vector<std::vector<double>> best_params;
};

// Minibatch training over every window of every clip. Windows are
// materialized batch by batch (clips stay in memory, window tensors do not).
// Epoch shuffling, dropout, and hence the loss history are fully determined
// by cfg.seed. Gradients are averaged over the batch; the last partial batch
// is kept. Clips shorter than window_t+1 frames contribute no windows.
TrainResult train_model(Model& model, const std::vector<ClipRecord>& clips,
                        const TrainConfig& cfg);

}  // namespace pulsekit
