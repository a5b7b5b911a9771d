#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "pulsekit/errors.hpp"
#include "pulsekit/gradcheck.hpp"
#include "pulsekit/ops.hpp"
#include "pulsekit/rng.hpp"
#include "pulsekit/tensor.hpp"

using namespace pulsekit;

namespace {

std::vector<double> random_vec(size_t n, Rng& rng, double lo = -1.0,
                               double hi = 1.0) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Reference convolution: literal six-loop definition with explicit bounds
// checks standing in for zero padding. Deliberately independent of the
// shift-decomposed implementation under test.
std::vector<double> conv3d_reference(const std::vector<double>& x, int64_t T,
                                     int64_t H, int64_t W, int64_t Ci,
                                     const std::vector<double>& w, int64_t Co,
                                     const std::vector<double>& b) {
  std::vector<double> out(static_cast<size_t>(T * H * W * Co));
  for (int64_t t = 0; t < T; ++t)
    for (int64_t y = 0; y < H; ++y)
      for (int64_t xx = 0; xx < W; ++xx)
        for (int64_t co = 0; co < Co; ++co) {
          double s = b[static_cast<size_t>(co)];
          for (int kt = 0; kt < 3; ++kt)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const int64_t ti = t + kt - 1;
                const int64_t yi = y + ky - 1;
                const int64_t xi = xx + kx - 1;
                if (ti < 0 || ti >= T || yi < 0 || yi >= H || xi < 0 ||
                    xi >= W)
                  continue;
                for (int64_t ci = 0; ci < Ci; ++ci)
                  s += x[static_cast<size_t>(((ti * H + yi) * W + xi) * Ci +
                                             ci)] *
                       w[static_cast<size_t>(
                           (((kt * 3 + ky) * 3 + kx) * Ci + ci) * Co + co)];
              }
          out[static_cast<size_t>(((t * H + y) * W + xx) * Co + co)] = s;
        }
  return out;
}

}  // namespace

TEST_CASE("factories and shape bookkeeping") {
  Tensor z = Tensor::zeros({2, 3});
  CHECK(z.numel() == 6);
  for (int i = 0; i < 6; ++i) CHECK(z.data()[i] == 0.0);
  Tensor f = Tensor::full({4}, 2.5);
  CHECK(f.data()[3] == 2.5);
  Tensor v = Tensor::from({2, 2}, {1, 2, 3, 4});
  CHECK(v.data()[2] == 3.0);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1, 2, 3}), ShapeMismatch);
}

TEST_CASE("elementwise forward values") {
  Tensor a = Tensor::from({3}, {1.0, -2.0, 0.5});
  Tensor b = Tensor::from({3}, {0.5, 1.0, -1.5});
  CHECK(add(a, b).data()[0] == doctest::Approx(1.5));
  CHECK(sub(a, b).data()[1] == doctest::Approx(-3.0));
  CHECK(mul(a, b).data()[2] == doctest::Approx(-0.75));
  CHECK(scale(a, -2.0).data()[0] == doctest::Approx(-2.0));
  CHECK(one_minus(a).data()[1] == doctest::Approx(3.0));
  CHECK(tanh_op(a).data()[0] == doctest::Approx(std::tanh(1.0)));
  CHECK(sigmoid_op(Tensor::from({1}, {0.0})).data()[0] ==
        doctest::Approx(0.5));
  // Sigmoid stays finite and saturates correctly at extreme inputs.
  Tensor ext = sigmoid_op(Tensor::from({2}, {800.0, -800.0}));
  CHECK(ext.data()[0] == doctest::Approx(1.0));
  CHECK(ext.data()[1] == doctest::Approx(0.0));
  CHECK_THROWS_AS(add(a, Tensor::zeros({4})), ShapeMismatch);
}

TEST_CASE("backward accumulates through shared subexpressions") {
  Tensor x = Tensor::from({1}, {3.0}, true);
  // y = x*x + x, dy/dx = 2x + 1 = 7 at x = 3.
  Tensor y = add(mul(x, x), x);
  backward(y);
  CHECK(x.grad()[0] == doctest::Approx(7.0));
  // A second backward adds on top of the stored gradient.
  Tensor y2 = add(mul(x, x), x);
  backward(y2);
  CHECK(x.grad()[0] == doctest::Approx(14.0));
  std::vector<Tensor> leaves{x};
  zero_grad(leaves);
  CHECK(x.grad()[0] == 0.0);
}

TEST_CASE("backward rejects bad roots") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor y = scale(x, 2.0);
  CHECK_THROWS_AS(backward(y), ShapeMismatch);
  Tensor nf = Tensor::from({1}, {std::nan("")}, true);
  Tensor z = scale(nf, 1.0);
  CHECK_THROWS_AS(backward(z), NonFiniteValue);
}

TEST_CASE("matmul forward and gradient") {
  Tensor a = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  Tensor b = Tensor::from({3, 2}, {7, 8, 9, 10, 11, 12}, true);
  Tensor c = matmul(a, b);
  CHECK(c.shape() == std::vector<int64_t>{2, 2});
  CHECK(c.data()[0] == doctest::Approx(58.0));
  CHECK(c.data()[3] == doctest::Approx(154.0));
  CHECK_THROWS_AS(matmul(a, Tensor::zeros({2, 2})), ShapeMismatch);

  Tensor target = Tensor::zeros({2, 2});
  auto rebuild = [&]() { return mse(matmul(a, b), target); };
  CHECK(gradcheck_max_rel(rebuild, {a, b}) < 1e-7);
}

TEST_CASE("concat, row and stack shapes and gradients") {
  Tensor a = Tensor::from({2, 2}, {1, 2, 3, 4}, true);
  Tensor b = Tensor::from({2, 1}, {5, 6}, true);
  Tensor c = concat_last({a, b});
  CHECK(c.shape() == std::vector<int64_t>{2, 3});
  CHECK(c.data()[2] == doctest::Approx(5.0));
  CHECK(c.data()[5] == doctest::Approx(6.0));
  CHECK_THROWS_AS(concat_last({a, Tensor::zeros({3, 1})}), ShapeMismatch);

  Tensor r = row(c, 1);
  CHECK(r.shape() == std::vector<int64_t>{1, 3});
  CHECK(r.data()[0] == doctest::Approx(3.0));
  CHECK_THROWS_AS(row(c, 2), InvalidArgument);

  Tensor s = stack_rows({row(c, 0), row(c, 1)});
  CHECK(s.shape() == std::vector<int64_t>{2, 3});
  for (int i = 0; i < 6; ++i)
    CHECK(s.data()[i] == doctest::Approx(c.data()[i]));

  Tensor target = Tensor::zeros({2, 3});
  auto rebuild = [&]() {
    Tensor cc = concat_last({a, b});
    Tensor ss = stack_rows({row(cc, 0), row(cc, 1)});
    return mse(tanh_op(ss), target);
  };
  CHECK(gradcheck_max_rel(rebuild, {a, b}) < 1e-5);
}

TEST_CASE("conv3d matches the literal definition") {
  Rng rng(0x51u);
  const int64_t T = 3, H = 5, W = 4, Ci = 2, Co = 4;
  auto xv = random_vec(static_cast<size_t>(T * H * W * Ci), rng);
  auto wv = random_vec(static_cast<size_t>(27 * Ci * Co), rng);
  auto bv = random_vec(static_cast<size_t>(Co), rng);
  Tensor x = Tensor::from({T, H, W, Ci}, xv);
  Tensor w = Tensor::from({3, 3, 3, Ci, Co}, wv);
  Tensor b = Tensor::from({Co}, bv);
  Tensor out = conv3d(x, w, b);
  auto ref = conv3d_reference(xv, T, H, W, Ci, wv, Co, bv);
  REQUIRE(out.numel() == static_cast<int64_t>(ref.size()));
  for (size_t i = 0; i < ref.size(); ++i)
    CHECK(out.data()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("conv3d with wide channel counts matches the literal definition") {
  // Exercises the register-blocked 16- and 32-wide kernels, not just the
  // generic fallback.
  Rng rng(0x52u);
  for (int64_t Co : {16, 32}) {
    const int64_t T = 2, H = 4, W = 3, Ci = 3;
    auto xv = random_vec(static_cast<size_t>(T * H * W * Ci), rng);
    auto wv = random_vec(static_cast<size_t>(27 * Ci * Co), rng);
    auto bv = random_vec(static_cast<size_t>(Co), rng);
    Tensor out = conv3d(Tensor::from({T, H, W, Ci}, xv),
                        Tensor::from({3, 3, 3, Ci, Co}, wv),
                        Tensor::from({Co}, bv));
    auto ref = conv3d_reference(xv, T, H, W, Ci, wv, Co, bv);
    for (size_t i = 0; i < ref.size(); ++i)
      CHECK(out.data()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
  }
}

TEST_CASE("conv3d centre-tap kernel copies a channel") {
  const int64_t T = 2, H = 3, W = 3, Ci = 2;
  Rng rng(0x53u);
  auto xv = random_vec(static_cast<size_t>(T * H * W * Ci), rng);
  std::vector<double> wv(27 * Ci, 0.0);
  // Kernel position (1,1,1), input channel 1, single output channel.
  wv[((1 * 3 + 1) * 3 + 1) * Ci + 1] = 1.0;
  Tensor out = conv3d(Tensor::from({T, H, W, Ci}, xv),
                      Tensor::from({3, 3, 3, Ci, 1}, wv),
                      Tensor::zeros({1}));
  for (int64_t p = 0; p < T * H * W; ++p)
    CHECK(out.data()[p] ==
          doctest::Approx(xv[static_cast<size_t>(p * Ci + 1)]));
}

TEST_CASE("conv3d rejects malformed shapes") {
  Tensor x = Tensor::zeros({2, 3, 3, 2});
  CHECK_THROWS_AS(
      conv3d(x, Tensor::zeros({3, 3, 3, 3, 4}), Tensor::zeros({4})),
      ShapeMismatch);
  CHECK_THROWS_AS(
      conv3d(x, Tensor::zeros({2, 3, 3, 2, 4}), Tensor::zeros({4})),
      ShapeMismatch);
  CHECK_THROWS_AS(
      conv3d(x, Tensor::zeros({3, 3, 3, 2, 4}), Tensor::zeros({3})),
      ShapeMismatch);
  CHECK_THROWS_AS(conv3d(Tensor::zeros({2, 3, 3}),
                         Tensor::zeros({3, 3, 3, 2, 4}), Tensor::zeros({4})),
                  ShapeMismatch);
}

TEST_CASE("conv3d gradients agree with finite differences") {
  Rng rng(0x54u);
  const int64_t T = 3, H = 4, W = 4, Ci = 2, Co = 3;
  Tensor x = Tensor::from({T, H, W, Ci},
                          random_vec(static_cast<size_t>(T * H * W * Ci), rng),
                          true);
  Tensor w = Tensor::from({3, 3, 3, Ci, Co},
                          random_vec(static_cast<size_t>(27 * Ci * Co), rng),
                          true);
  Tensor b = Tensor::from({Co}, random_vec(static_cast<size_t>(Co), rng),
                          true);
  Tensor target = Tensor::zeros({T, H, W, Co});
  auto rebuild = [&]() { return mse(tanh_op(conv3d(x, w, b)), target); };
  CHECK(gradcheck_max_rel(rebuild, {x, w, b}) < 1e-5);
}

TEST_CASE("average pooling halves the grid and keeps means") {
  // 1x4x4x1 input with known block means.
  std::vector<double> xv = {1, 2, 5, 6,    //
                            3, 4, 7, 8,    //
                            9, 10, 13, 14,  //
                            11, 12, 15, 16};
  Tensor out = avg_pool_spatial(Tensor::from({1, 4, 4, 1}, xv));
  CHECK(out.shape() == std::vector<int64_t>{1, 2, 2, 1});
  CHECK(out.data()[0] == doctest::Approx(2.5));
  CHECK(out.data()[1] == doctest::Approx(6.5));
  CHECK(out.data()[2] == doctest::Approx(10.5));
  CHECK(out.data()[3] == doctest::Approx(14.5));
  CHECK_THROWS_AS(avg_pool_spatial(Tensor::zeros({1, 3, 4, 1})),
                  ShapeMismatch);
  CHECK_THROWS_AS(avg_pool_spatial(Tensor::zeros({3, 4, 1})), ShapeMismatch);
}

TEST_CASE("global pooling averages each frame") {
  std::vector<double> xv(2 * 2 * 2 * 2);
  for (size_t i = 0; i < xv.size(); ++i) xv[i] = static_cast<double>(i);
  Tensor out = global_pool_spatial(Tensor::from({2, 2, 2, 2}, xv));
  CHECK(out.shape() == std::vector<int64_t>{2, 2});
  // Frame 0 channel 0 holds {0,2,4,6}; channel 1 holds {1,3,5,7}.
  CHECK(out.data()[0] == doctest::Approx(3.0));
  CHECK(out.data()[1] == doctest::Approx(4.0));
  CHECK(out.data()[2] == doctest::Approx(11.0));
  CHECK(out.data()[3] == doctest::Approx(12.0));
}

TEST_CASE("pooling gradients agree with finite differences") {
  Rng rng(0x55u);
  Tensor x = Tensor::from({2, 4, 4, 3},
                          random_vec(static_cast<size_t>(2 * 4 * 4 * 3), rng),
                          true);
  Tensor target = Tensor::zeros({2, 3});
  auto rebuild = [&]() {
    return mse(global_pool_spatial(avg_pool_spatial(tanh_op(x))), target);
  };
  CHECK(gradcheck_max_rel(rebuild, {x}) < 1e-5);
}

TEST_CASE("mask multiply broadcasts over channels") {
  Rng rng(0x56u);
  const int64_t T = 2, H = 2, W = 2, C = 3;
  auto xv = random_vec(static_cast<size_t>(T * H * W * C), rng);
  auto mv = random_vec(static_cast<size_t>(T * H * W), rng, 0.0, 1.0);
  Tensor x = Tensor::from({T, H, W, C}, xv, true);
  Tensor m = Tensor::from({T, H, W, 1}, mv, true);
  Tensor out = mul_mask(x, m);
  for (int64_t p = 0; p < T * H * W; ++p)
    for (int64_t c = 0; c < C; ++c)
      CHECK(out.data()[p * C + c] ==
            doctest::Approx(xv[static_cast<size_t>(p * C + c)] *
                            mv[static_cast<size_t>(p)]));
  CHECK_THROWS_AS(mul_mask(x, Tensor::zeros({T, H, W, 2})), ShapeMismatch);

  Tensor target = Tensor::zeros({T, H, W, C});
  auto rebuild = [&]() { return mse(mul_mask(tanh_op(x), sigmoid_op(m)),
                                    target); };
  CHECK(gradcheck_max_rel(rebuild, {x, m}) < 1e-5);
}

TEST_CASE("dropout is deterministic, inverted, and off in eval mode") {
  Rng rng(0x57u);
  Tensor x = Tensor::from({1000}, random_vec(1000, rng, 0.5, 1.5));
  Tensor eval_out = dropout(x, 0.25, false, 1u);
  for (int i = 0; i < 1000; ++i) CHECK(eval_out.data()[i] == x.data()[i]);

  Tensor a = dropout(x, 0.25, true, 42u);
  Tensor b2 = dropout(x, 0.25, true, 42u);
  Tensor c = dropout(x, 0.25, true, 43u);
  int dropped = 0;
  bool differs_across_seeds = false;
  for (int i = 0; i < 1000; ++i) {
    CHECK(a.data()[i] == b2.data()[i]);
    if (a.data()[i] != c.data()[i]) differs_across_seeds = true;
    if (a.data()[i] == 0.0) {
      ++dropped;
    } else {
      // Kept entries are scaled by 1/(1-rate).
      CHECK(a.data()[i] == doctest::Approx(x.data()[i] / 0.75));
    }
  }
  CHECK(differs_across_seeds);
  // Drop fraction should land near the rate; loose band to stay stable.
  CHECK(dropped > 180);
  CHECK(dropped < 320);
  CHECK_THROWS_AS(dropout(x, 1.0, true, 1u), InvalidArgument);
  CHECK_THROWS_AS(dropout(x, -0.1, true, 1u), InvalidArgument);
}

TEST_CASE("dropout gradient respects the sampled mask") {
  Rng rng(0x58u);
  Tensor x = Tensor::from({40}, random_vec(40, rng), true);
  Tensor target = Tensor::zeros({40});
  auto rebuild = [&]() {
    return mse(dropout(tanh_op(x), 0.5, true, 7u), target);
  };
  CHECK(gradcheck_max_rel(rebuild, {x}) < 1e-5);
}

TEST_CASE("loss values and gradients") {
  Tensor p = Tensor::from({2}, {1.0, 0.0}, true);
  Tensor t = Tensor::from({2}, {0.0, 0.0});
  CHECK(mse(p, t).item() == doctest::Approx(0.5));
  CHECK(mae(p, t).item() == doctest::Approx(0.5));

  Tensor p3 = Tensor::from({3}, {1.0, 0.0, 0.0});
  Tensor t3 = Tensor::from({3}, {0.0, 0.0, 0.0});
  CHECK(mse(p3, t3).item() == doctest::Approx(1.0 / 3.0));

  backward(mse(p, t));
  CHECK(p.grad()[0] == doctest::Approx(1.0));  // 2/n * (1-0) with n=2
  CHECK(p.grad()[1] == doctest::Approx(0.0));

  Rng rng(0x59u);
  Tensor pp = Tensor::from({6}, random_vec(6, rng, 1.0, 2.0), true);
  Tensor tt = Tensor::from({6}, random_vec(6, rng, -2.0, -1.0));
  auto rebuild_mse = [&]() { return mse(pp, tt); };
  CHECK(gradcheck_max_rel(rebuild_mse, {pp}) < 1e-7);
  // Differences are bounded away from zero, so mae is smooth here.
  auto rebuild_mae = [&]() { return mae(pp, tt); };
  CHECK(gradcheck_max_rel(rebuild_mae, {pp}) < 1e-7);
  CHECK_THROWS_AS(mse(pp, Tensor::zeros({5})), ShapeMismatch);
}

TEST_CASE("gradients flow only into leaves that ask for them") {
  Tensor a = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor b = Tensor::from({2}, {3.0, 4.0});  // no grad
  Tensor loss = mse(mul(a, b), Tensor::zeros({2}));
  backward(loss);
  CHECK(a.grad().size() == 2);
  CHECK(b.grad().empty());
  CHECK(a.grad()[0] == doctest::Approx(2.0 / 2.0 * 3.0 * 3.0));
}
