#include "pulsekit/model.hpp"

#include <cmath>

#include "pulsekit/errors.hpp"
#include "pulsekit/ops.hpp"
#include "pulsekit/rng.hpp"

namespace pulsekit {

namespace {

constexpr double kDropoutRate = 0.25;

ConvLayer make_conv(int64_t ci, int64_t co, Rng rng) {
  ConvLayer layer;
  const double bound = 1.0 / std::sqrt(static_cast<double>(27 * ci));
  std::vector<double> w(static_cast<size_t>(27 * ci * co));
  for (double& v : w) v = rng.uniform(-bound, bound);
  layer.w = Tensor::from({3, 3, 3, ci, co}, std::move(w), true);
  layer.b = Tensor::zeros({co}, true);
  return layer;
}

HeadParams make_head(int64_t feature_width, int64_t hidden, Rng rng) {
  HeadParams head;
  Rng f = rng.fork(1);
  Rng b = rng.fork(2);
  Rng o = rng.fork(3);
  head.fwd = make_gru_params(feature_width, hidden, false, f);
  head.bwd = make_gru_params(feature_width, hidden, false, b);
  head.out = make_gru_params(2 * hidden, 1, true, o);
  return head;
}

void collect_conv(std::vector<std::pair<std::string, Tensor>>& out,
                  const std::string& prefix, const ConvLayer& layer) {
  out.emplace_back(prefix + ".w", layer.w);
  out.emplace_back(prefix + ".b", layer.b);
}

void collect_gru(std::vector<std::pair<std::string, Tensor>>& out,
                 const std::string& prefix, const GruParams& p) {
  static const char* names[] = {"Wz", "Uz", "bz", "Wr", "Ur",
                                "br", "Wc", "Uc", "bc"};
  std::vector<Tensor> all = p.all();
  for (size_t i = 0; i < all.size(); ++i) {
    out.emplace_back(prefix + "." + names[i], all[i]);
  }
}

void collect_branch(std::vector<std::pair<std::string, Tensor>>& out,
                    const std::string& prefix, const BranchParams& b) {
  collect_conv(out, prefix + ".c1", b.c1);
  collect_conv(out, prefix + ".c2", b.c2);
  collect_conv(out, prefix + ".c3", b.c3);
  collect_conv(out, prefix + ".c4", b.c4);
}

void collect_head(std::vector<std::pair<std::string, Tensor>>& out,
                  const std::string& prefix, const HeadParams& h) {
  collect_gru(out, prefix + ".fwd", h.fwd);
  collect_gru(out, prefix + ".bwd", h.bwd);
  collect_gru(out, prefix + ".out", h.out);
}

void check_frames(const FrameTensor& f, int64_t t_window, int64_t hw,
                  const char* what) {
  if (f.steps != t_window || f.height != hw || f.width != hw) {
    throw ShapeMismatch(std::string(what) + " does not match the model dims");
  }
}

Tensor frames_to_tensor(const FrameTensor& f) {
  return Tensor::from({f.steps, f.height, f.width, 3}, f.values, false);
}

Tensor run_branch(const BranchParams& bp, const Tensor& x, const Tensor& mask,
                  bool training, uint64_t seed, uint64_t slot,
                  ForwardTrace* trace) {
  Tensor h = tanh_op(conv3d(x, bp.c1.w, bp.c1.b));
  h = tanh_op(conv3d(h, bp.c2.w, bp.c2.b));
  if (mask.defined()) h = mul_mask(h, mask);
  if (trace) trace->branch_activations.push_back(h);
  h = avg_pool_spatial(h);
  h = dropout(h, kDropoutRate, training, Rng::mix(seed, slot));
  h = tanh_op(conv3d(h, bp.c3.w, bp.c3.b));
  h = tanh_op(conv3d(h, bp.c4.w, bp.c4.b));
  h = avg_pool_spatial(h);
  h = dropout(h, kDropoutRate, training, Rng::mix(seed, slot + 1));
  h = global_pool_spatial(h);
  h = dropout(h, kDropoutRate, training, Rng::mix(seed, slot + 2));
  return h;
}

Tensor run_head(const HeadParams& head, const Tensor& features) {
  Tensor h = bigru_forward(head.fwd, head.bwd, features);
  return gru_forward(head.out, h);
}

Tensor target_tensor(const std::vector<double>& t) {
  return Tensor::from({static_cast<int64_t>(t.size()), 1}, t, false);
}

Tensor pointwise_loss(const Tensor& pred, const Tensor& target, LossKind kind) {
  return kind == LossKind::mse ? mse(pred, target) : mae(pred, target);
}

}  // namespace

std::vector<std::pair<std::string, Tensor>> Model::named_params() const {
  std::vector<std::pair<std::string, Tensor>> out;
  if (cfg.arch == Arch::attention) {
    collect_conv(out, "att.a1", att.a1);
    collect_conv(out, "att.a2", att.a2);
    collect_conv(out, "att.a3", att.a3);
  }
  if (cfg.use_fd_input) collect_branch(out, "fd_branch", fd_branch);
  if (cfg.use_sd_input) collect_branch(out, "sd_branch", sd_branch);
  if (cfg.use_fd_target) collect_head(out, "fd_head", fd_head);
  if (cfg.use_sd_target) collect_head(out, "sd_head", sd_head);
  return out;
}

std::vector<Tensor> Model::params() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_params()) out.push_back(t);
  return out;
}

Model build_model(const ModelConfig& cfg, int64_t input_hw, int64_t t_window,
                  uint64_t seed) {
  if (!cfg.use_fd_input && !cfg.use_sd_input) {
    throw NoInputEnabled("at least one derivative input must be enabled");
  }
  if (!cfg.use_fd_target && !cfg.use_sd_target) {
    throw NoTargetEnabled("at least one target must be enabled");
  }
  if (input_hw < 4 || input_hw % 4 != 0) {
    throw InvalidArgument("input_hw must be a positive multiple of 4");
  }
  if (t_window < 1) throw InvalidArgument("t_window must be >= 1");
  if (cfg.filters_a < 1 || cfg.filters_b < 1 || cfg.gru_hidden < 1) {
    throw InvalidArgument("layer widths must be >= 1");
  }
  if (!(cfg.weight_fd >= 0.0) || !(cfg.weight_sd >= 0.0)) {
    throw InvalidArgument("target weights must be >= 0");
  }

  Model m;
  m.cfg = cfg;
  m.input_hw = input_hw;
  m.t_window = t_window;

  // Independent streams per layer: configs that share a layer share its
  // initial weights for the same seed, whatever else is enabled.
  Rng root(seed);
  if (cfg.arch == Arch::attention) {
    m.att.a1 = make_conv(3, cfg.filters_a, root.fork(1));
    m.att.a2 = make_conv(cfg.filters_a, cfg.filters_a, root.fork(2));
    m.att.a3 = make_conv(cfg.filters_a, 1, root.fork(3));
  }
  auto make_branch = [&](uint64_t base) {
    BranchParams b;
    b.c1 = make_conv(3, cfg.filters_a, root.fork(base));
    b.c2 = make_conv(cfg.filters_a, cfg.filters_a, root.fork(base + 1));
    b.c3 = make_conv(cfg.filters_a, cfg.filters_b, root.fork(base + 2));
    b.c4 = make_conv(cfg.filters_b, cfg.filters_b, root.fork(base + 3));
    return b;
  };
  if (cfg.use_fd_input) m.fd_branch = make_branch(10);
  if (cfg.use_sd_input) m.sd_branch = make_branch(20);

  const int64_t n_branches =
      (cfg.use_fd_input ? 1 : 0) + (cfg.use_sd_input ? 1 : 0);
  const int64_t feature_width = n_branches * cfg.filters_b;
  if (cfg.use_fd_target) {
    m.fd_head = make_head(feature_width, cfg.gru_hidden, root.fork(30));
  }
  if (cfg.use_sd_target) {
    m.sd_head = make_head(feature_width, cfg.gru_hidden, root.fork(40));
  }
  return m;
}

Predictions forward(const Model& m, const TrainingExample& ex, RunMode mode,
                    uint64_t seed, ForwardTrace* trace) {
  const bool training = mode == RunMode::train;
  if (m.cfg.use_fd_input) {
    check_frames(ex.fd_frames, m.t_window, m.input_hw, "fd_frames");
  }
  if (m.cfg.use_sd_input) {
    check_frames(ex.sd_frames, m.t_window, m.input_hw, "sd_frames");
  }

  Tensor mask;
  if (m.cfg.arch == Arch::attention) {
    check_frames(ex.raw_frames, m.t_window, m.input_hw, "raw_frames");
    Tensor raw = frames_to_tensor(ex.raw_frames);
    Tensor a = tanh_op(conv3d(raw, m.att.a1.w, m.att.a1.b));
    a = tanh_op(conv3d(a, m.att.a2.w, m.att.a2.b));
    mask = sigmoid_op(conv3d(a, m.att.a3.w, m.att.a3.b));
    if (trace) trace->mask = mask;
  }

  std::vector<Tensor> branch_out;
  if (m.cfg.use_fd_input) {
    branch_out.push_back(run_branch(m.fd_branch, frames_to_tensor(ex.fd_frames),
                                    mask, training, seed, 0, trace));
  }
  if (m.cfg.use_sd_input) {
    branch_out.push_back(run_branch(m.sd_branch, frames_to_tensor(ex.sd_frames),
                                    mask, training, seed, 3, trace));
  }
  Tensor features =
      branch_out.size() == 1 ? branch_out[0] : concat_last(branch_out);
  if (trace) trace->features = features;

  Predictions pred;
  if (m.cfg.use_fd_target) {
    pred.fd = run_head(m.fd_head, features);
    pred.has_fd = true;
  }
  if (m.cfg.use_sd_target) {
    pred.sd = run_head(m.sd_head, features);
    pred.has_sd = true;
  }
  return pred;
}

Tensor compute_loss(const Predictions& pred, const TrainingExample& ex,
                    const ModelConfig& cfg) {
  Tensor total;
  if (cfg.use_fd_target) {
    if (!pred.has_fd) throw MissingTarget("fd prediction missing");
    Tensor l = scale(
        pointwise_loss(pred.fd, target_tensor(ex.fd_target), cfg.loss_kind),
        cfg.weight_fd);
    total = l;
  }
  if (cfg.use_sd_target) {
    if (!pred.has_sd) throw MissingTarget("sd prediction missing");
    Tensor l = scale(
        pointwise_loss(pred.sd, target_tensor(ex.sd_target), cfg.loss_kind),
        cfg.weight_sd);
    total = total.defined() ? add(total, l) : l;
  }
  if (!total.defined()) {
    throw NoTargetEnabled("loss needs at least one enabled target");
  }
  return total;
}

}  // namespace pulsekit
