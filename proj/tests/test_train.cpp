#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "pulsekit/errors.hpp"
#include "pulsekit/model.hpp"
#include "pulsekit/render.hpp"
#include "pulsekit/train.hpp"

using namespace pulsekit;

namespace {

std::vector<ClipRecord> tiny_dataset(int64_t n_clips, double duration_s,
                                     uint64_t seed) {
  SamplerRanges ranges;
  ranges.motion_amp = Interval{0.0, 0.2};
  ranges.noise_sigma = Interval{0.001, 0.004};
  return make_dataset(n_clips, ranges, 8, 8, 30.0, duration_s, seed);
}

ModelConfig tiny_cfg() {
  ModelConfig cfg;
  cfg.use_fd_input = true;
  cfg.use_sd_input = false;
  cfg.use_fd_target = true;
  cfg.use_sd_target = false;
  cfg.filters_a = 2;
  cfg.filters_b = 2;
  cfg.gru_hidden = 2;
  return cfg;
}

TrainConfig quick_train(int64_t epochs, int64_t batch) {
  TrainConfig tc;
  tc.epochs = epochs;
  tc.batch_size = batch;
  tc.window_t = 4;
  tc.window_stride = 4;
  tc.seed = 7;
  return tc;
}

}  // namespace

TEST_CASE("a tiny run overfits and logs one finite loss per epoch") {
  std::vector<ClipRecord> clips = tiny_dataset(2, 0.5, 3);
  Model model = build_model(tiny_cfg(), 8, 4, 11);
  TrainResult r = train_model(model, clips, quick_train(50, 64));

  REQUIRE(r.epoch_loss.size() == 50);
  for (double v : r.epoch_loss) REQUIRE(std::isfinite(v));
  CHECK(r.epoch_loss.back() < r.epoch_loss.front());
  CHECK(r.best_epoch < 50);
  CHECK(r.epoch_loss[r.best_epoch] ==
        *std::min_element(r.epoch_loss.begin(), r.epoch_loss.end()));
  CHECK(r.best_params.size() == model.params().size());
}

TEST_CASE("training is bitwise deterministic in the seed") {
  std::vector<ClipRecord> clips = tiny_dataset(2, 0.5, 4);

  Model m1 = build_model(tiny_cfg(), 8, 4, 21);
  TrainResult r1 = train_model(m1, clips, quick_train(4, 3));
  Model m2 = build_model(tiny_cfg(), 8, 4, 21);
  TrainResult r2 = train_model(m2, clips, quick_train(4, 3));

  CHECK(r1.epoch_loss == r2.epoch_loss);
  auto p1 = m1.params();
  auto p2 = m2.params();
  for (size_t i = 0; i < p1.size(); ++i) {
    REQUIRE(p1[i].data() == p2[i].data());
  }

  TrainConfig other = quick_train(4, 3);
  other.seed = 8;
  Model m3 = build_model(tiny_cfg(), 8, 4, 21);
  TrainResult r3 = train_model(m3, clips, other);
  CHECK(r1.epoch_loss != r3.epoch_loss);
}

TEST_CASE("step accounting: full batch is one step per epoch") {
  std::vector<ClipRecord> clips = tiny_dataset(2, 0.5, 5);
  // 0.5 s at 30 fps = 15 frames; T=4, stride 4 -> 3 windows per clip.
  Model m = build_model(tiny_cfg(), 8, 4, 31);
  TrainResult full = train_model(m, clips, quick_train(3, 100));
  CHECK(full.steps_taken == 3);

  // Exactly the dataset size behaves the same as any larger batch.
  Model m_exact = build_model(tiny_cfg(), 8, 4, 31);
  TrainResult exact = train_model(m_exact, clips, quick_train(3, 6));
  CHECK(exact.steps_taken == 3);
  CHECK(exact.epoch_loss == full.epoch_loss);

  // 6 windows at batch 4 -> 2 steps per epoch, last partial batch kept.
  Model m_partial = build_model(tiny_cfg(), 8, 4, 31);
  TrainResult partial = train_model(m_partial, clips, quick_train(3, 4));
  CHECK(partial.steps_taken == 6);
}

TEST_CASE("train rejects bad configs and empty datasets") {
  std::vector<ClipRecord> clips = tiny_dataset(1, 0.5, 6);
  Model m = build_model(tiny_cfg(), 8, 4, 41);

  TrainConfig zero_epochs = quick_train(0, 4);
  CHECK_THROWS_AS(train_model(m, clips, zero_epochs), InvalidArgument);
  TrainConfig zero_batch = quick_train(1, 0);
  CHECK_THROWS_AS(train_model(m, clips, zero_batch), InvalidArgument);
  TrainConfig bad_lr = quick_train(1, 4);
  bad_lr.lr = 0.0;
  CHECK_THROWS_AS(train_model(m, clips, bad_lr), InvalidArgument);

  std::vector<ClipRecord> none;
  CHECK_THROWS_AS(train_model(m, none, quick_train(1, 4)), EmptyDataset);

  // Clips shorter than a window yield no windows at all.
  TrainConfig wide = quick_train(1, 4);
  wide.window_t = 60;
  CHECK_THROWS_AS(train_model(m, clips, wide), EmptyDataset);
}

TEST_CASE("a poisoned parameter surfaces as NonFiniteLoss with the batch") {
  std::vector<ClipRecord> clips = tiny_dataset(1, 0.5, 8);
  Model m = build_model(tiny_cfg(), 8, 4, 51);
  m.fd_head.out.Wc.data()[0] = std::numeric_limits<double>::infinity();
  try {
    train_model(m, clips, quick_train(1, 4));
    FAIL("expected NonFiniteLoss");
  } catch (const NonFiniteLoss& e) {
    CHECK(std::string(e.what()).find("batch 0") != std::string::npos);
  }
}
