// Throughput probe for the convolution kernels at the shapes the video
// branches actually use. Not a test; run manually to check the speed budget.
#include <chrono>
#include <cstdio>
#include <vector>

#include "pulsekit/ops.hpp"
#include "pulsekit/rng.hpp"
#include "pulsekit/tensor.hpp"

using namespace pulsekit;

namespace {

double now_s() {
  using clock = std::chrono::steady_clock;
  return std::chrono::duration<double>(clock::now().time_since_epoch())
      .count();
}

void bench_case(const char* name, int64_t T, int64_t H, int64_t W, int64_t Ci,
                int64_t Co, int reps) {
  Rng rng(0x7beac4u);
  std::vector<double> xv(static_cast<size_t>(T * H * W * Ci));
  std::vector<double> wv(static_cast<size_t>(27 * Ci * Co));
  std::vector<double> bv(static_cast<size_t>(Co));
  for (auto& v : xv) v = rng.uniform(-1.0, 1.0);
  for (auto& v : wv) v = rng.uniform(-0.2, 0.2);
  for (auto& v : bv) v = rng.uniform(-0.1, 0.1);

  Tensor x = Tensor::from({T, H, W, Ci}, xv, true);
  Tensor w = Tensor::from({3, 3, 3, Ci, Co}, wv, true);
  Tensor b = Tensor::from({Co}, bv, true);
  std::vector<Tensor> leaves = {x, w, b};

  // 2 flops per MAC; "same" padding means boundary taps are skipped, count
  // the interior estimate anyway for a stable denominator.
  const double flop_fwd = 2.0 * 27.0 * static_cast<double>(T * H * W) *
                          static_cast<double>(Ci) * static_cast<double>(Co);

  double sink = 0.0;
  double t0 = now_s();
  for (int r = 0; r < reps; ++r) {
    Tensor out = conv3d(x, w, b);
    sink += out.data()[0];
  }
  double fwd_s = (now_s() - t0) / reps;

  t0 = now_s();
  for (int r = 0; r < reps; ++r) {
    zero_grad(leaves);
    Tensor loss = mse(conv3d(x, w, b), Tensor::zeros({T, H, W, Co}));
    backward(loss);
    sink += x.grad()[0];
  }
  double full_s = (now_s() - t0) / reps;
  // Backward does ~2x the forward MACs (input grad + weight grad).
  std::printf(
      "%-22s fwd %7.2f ms (%6.2f GF/s) | fwd+bwd %7.2f ms (%6.2f GF/s) "
      "[sink %.3g]\n",
      name, fwd_s * 1e3, flop_fwd / fwd_s * 1e-9, full_s * 1e3,
      3.0 * flop_fwd / full_s * 1e-9, sink);
}

}  // namespace

int main() {
  bench_case("3->16  30x36x36", 30, 36, 36, 3, 16, 4);
  bench_case("16->16 30x36x36", 30, 36, 36, 16, 16, 3);
  bench_case("16->1  30x36x36", 30, 36, 36, 16, 1, 4);
  bench_case("16->32 30x18x18", 30, 18, 18, 16, 32, 4);
  bench_case("32->32 30x18x18", 30, 18, 18, 32, 32, 3);
  return 0;
}
