#include "pulsekit/gru.hpp"

#include <cmath>

#include "pulsekit/errors.hpp"
#include "pulsekit/ops.hpp"

namespace pulsekit {

namespace {

Tensor uniform_matrix(int64_t rows, int64_t cols, int64_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::vector<double> v(static_cast<size_t>(rows * cols));
  for (auto& x : v) x = rng.uniform(-bound, bound);
  return Tensor::from({rows, cols}, std::move(v), true);
}

}  // namespace

GruParams make_gru_params(int64_t input_size, int64_t hidden_size,
                          bool linear_candidate, Rng& rng) {
  if (input_size <= 0 || hidden_size <= 0)
    throw InvalidArgument("gru: sizes must be positive");
  GruParams p;
  p.input_size = input_size;
  p.hidden_size = hidden_size;
  p.linear_candidate = linear_candidate;
  p.Wz = uniform_matrix(input_size, hidden_size, input_size, rng);
  p.Uz = uniform_matrix(hidden_size, hidden_size, hidden_size, rng);
  p.bz = Tensor::zeros({1, hidden_size}, true);
  p.Wr = uniform_matrix(input_size, hidden_size, input_size, rng);
  p.Ur = uniform_matrix(hidden_size, hidden_size, hidden_size, rng);
  p.br = Tensor::zeros({1, hidden_size}, true);
  p.Wc = uniform_matrix(input_size, hidden_size, input_size, rng);
  p.Uc = uniform_matrix(hidden_size, hidden_size, hidden_size, rng);
  p.bc = Tensor::zeros({1, hidden_size}, true);
  return p;
}

Tensor gru_forward(const GruParams& p, const Tensor& x, bool reverse) {
  if (x.shape().size() != 2 || x.shape()[1] != p.input_size)
    throw ShapeMismatch("gru: input must be [T, input_size]");
  const int64_t T = x.shape()[0];
  if (T < 1) throw ShapeMismatch("gru: empty sequence");

  Tensor h = Tensor::zeros({1, p.hidden_size});
  std::vector<Tensor> states(static_cast<size_t>(T), h);
  for (int64_t i = 0; i < T; ++i) {
    const int64_t t = reverse ? T - 1 - i : i;
    Tensor xt = row(x, t);
    Tensor z = sigmoid_op(
        add(add(matmul(xt, p.Wz), matmul(h, p.Uz)), p.bz));
    Tensor r = sigmoid_op(
        add(add(matmul(xt, p.Wr), matmul(h, p.Ur)), p.br));
    Tensor pre = add(add(matmul(xt, p.Wc), matmul(mul(r, h), p.Uc)), p.bc);
    Tensor c = p.linear_candidate ? pre : tanh_op(pre);
    h = add(mul(z, h), mul(one_minus(z), c));
    states[static_cast<size_t>(t)] = h;
  }
  return stack_rows(states);
}

Tensor bigru_forward(const GruParams& fwd, const GruParams& bwd,
                     const Tensor& x) {
  return concat_last({gru_forward(fwd, x, false), gru_forward(bwd, x, true)});
}

}  // namespace pulsekit
