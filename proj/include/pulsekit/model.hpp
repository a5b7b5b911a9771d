#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pulsekit/gru.hpp"
#include "pulsekit/preprocess.hpp"
#include "pulsekit/tensor.hpp"

namespace pulsekit {

enum class Arch { attention, plain };
enum class LossKind { mse, mae };

struct ModelConfig {
  Arch arch = Arch::attention;
  bool use_fd_input = true;
  bool use_sd_input = false;
  bool use_fd_target = true;
  bool use_sd_target = false;
  LossKind loss_kind = LossKind::mse;
  double weight_fd = 1.0;
  double weight_sd = 1.0;
  // Layer widths. Defaults are the reference architecture (16/32 filters,
  // 32 GRU units per direction); tests shrink them for cheap numeric probes.
  int64_t filters_a = 16;
  int64_t filters_b = 32;
  int64_t gru_hidden = 32;
};

struct ConvLayer {
  Tensor w;  // [3,3,3,ci,co]
  Tensor b;  // [co]
};

// One derivative branch: conv pair at filters_a, conv pair at filters_b,
// pooling and dropout between, global spatial pool at the end.
struct BranchParams {
  ConvLayer c1, c2, c3, c4;
};

// Mask generator: two tanh conv layers at filters_a, then a single-channel
// sigmoid conv. Consumes raw frames; emits one mask per time step.
struct AttentionParams {
  ConvLayer a1, a2, a3;
};

// Per-target recurrent head: bidirectional GRU (tanh) into a single-unit
// GRU with a linear candidate, one output value per time step.
struct HeadParams {
  GruParams fwd, bwd, out;
};

struct Model {
  ModelConfig cfg;
  int64_t input_hw = 0;
  int64_t t_window = 0;
  AttentionParams att;
  BranchParams fd_branch;
  BranchParams sd_branch;
  HeadParams fd_head;
  HeadParams sd_head;

  // Enabled parameters in a stable order, named for checkpoints.
  std::vector<std::pair<std::string, Tensor>> named_params() const;
  std::vector<Tensor> params() const;
};

struct Predictions {
  Tensor fd;  // [T,1] when has_fd
  Tensor sd;  // [T,1] when has_sd
  bool has_fd = false;
  bool has_sd = false;
};

// Intermediate activations captured when a trace pointer is handed to
// forward; used by tests and debugging, never by training itself.
struct ForwardTrace {
  Tensor mask;  // [T,H,W,1]; defined only for the attention arch
  // Per enabled branch (fd first): activations at the attention application
  // point (after the second conv, after the mask multiply when present).
  std::vector<Tensor> branch_activations;
  Tensor features;  // [T, n_branches * filters_b] fed to the heads
};

enum class RunMode { train, eval };

// Deterministic initialization from the seed: weights uniform in
// +-1/sqrt(fan_in), biases zero. Layer streams are forked independently, so
// the plain arch shares branch and head weights with the attention arch
// built from the same seed.
Model build_model(const ModelConfig& cfg, int64_t input_hw, int64_t t_window,
                  uint64_t seed);

// Runs the network on one window. Dropout is active only in train mode and
// draws its masks from the seed, so a train-mode call is reproducible.
Predictions forward(const Model& m, const TrainingExample& ex, RunMode mode,
                    uint64_t seed, ForwardTrace* trace = nullptr);

// Weighted sum over enabled targets of the configured pointwise loss.
Tensor compute_loss(const Predictions& pred, const TrainingExample& ex,
                    const ModelConfig& cfg);

}  // namespace pulsekit
