#include "pulsekit/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <utility>

#include "pulsekit/errors.hpp"
#include "pulsekit/rng.hpp"

namespace pulsekit {

namespace {

using NodePtr = std::shared_ptr<TensorNode>;

bool any_requires(const std::vector<Tensor>& parents) {
  for (const auto& p : parents) {
    if (p.node()->requires_grad) return true;
  }
  return false;
}

Tensor make_op(std::vector<int64_t> shape, std::vector<double> value,
               const std::vector<Tensor>& parents,
               std::function<void(const TensorNode&, Gradients&)> bw) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  if (any_requires(parents)) {
    n->requires_grad = true;
    n->parents.reserve(parents.size());
    for (const auto& p : parents) n->parents.push_back(p.node());
    n->backward_fn = std::move(bw);
  }
  return Tensor(n);
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw ShapeMismatch(std::string(what) + ": shapes differ");
}

// Adds g into the gradient buffer of `parent` if it participates in the graph.
void accumulate(Gradients& g, const NodePtr& parent,
                const std::vector<double>& contrib) {
  if (!parent->requires_grad) return;
  auto& buf = g.of(*parent);
  for (size_t i = 0; i < contrib.size(); ++i) buf[i] += contrib[i];
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {a, b},
                 [pa, pb](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs) return;
                   accumulate(g, pa, *gs);
                   accumulate(g, pb, *gs);
                 });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {a, b},
                 [pa, pb](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs) return;
                   accumulate(g, pa, *gs);
                   if (pb->requires_grad) {
                     auto& buf = g.of(*pb);
                     for (size_t i = 0; i < gs->size(); ++i) buf[i] -= (*gs)[i];
                   }
                 });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  const auto& av = a.node()->value;
  const auto& bv = b.node()->value;
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  auto pa = a.node(), pb = b.node();
  return make_op(a.shape(), std::move(out), {a, b},
                 [pa, pb](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs) return;
                   if (pa->requires_grad) {
                     auto& buf = g.of(*pa);
                     for (size_t i = 0; i < gs->size(); ++i)
                       buf[i] += (*gs)[i] * pb->value[i];
                   }
                   if (pb->requires_grad) {
                     auto& buf = g.of(*pb);
                     for (size_t i = 0; i < gs->size(); ++i)
                       buf[i] += (*gs)[i] * pa->value[i];
                   }
                 });
}

Tensor scale(const Tensor& a, double c) {
  const auto& av = a.node()->value;
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = av[i] * c;
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [pa, c](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs || !pa->requires_grad) return;
                   auto& buf = g.of(*pa);
                   for (size_t i = 0; i < gs->size(); ++i)
                     buf[i] += (*gs)[i] * c;
                 });
}

Tensor one_minus(const Tensor& a) {
  const auto& av = a.node()->value;
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = 1.0 - av[i];
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [pa](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs || !pa->requires_grad) return;
                   auto& buf = g.of(*pa);
                   for (size_t i = 0; i < gs->size(); ++i) buf[i] -= (*gs)[i];
                 });
}

Tensor tanh_op(const Tensor& a) {
  const auto& av = a.node()->value;
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) out[i] = std::tanh(av[i]);
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [pa](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs || !pa->requires_grad) return;
                   auto& buf = g.of(*pa);
                   for (size_t i = 0; i < gs->size(); ++i) {
                     const double y = self.value[i];
                     buf[i] += (*gs)[i] * (1.0 - y * y);
                   }
                 });
}

Tensor sigmoid_op(const Tensor& a) {
  const auto& av = a.node()->value;
  std::vector<double> out(av.size());
  for (size_t i = 0; i < av.size(); ++i) {
    const double x = av[i];
    // Branch on sign to avoid overflow in exp for large |x|.
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
  }
  auto pa = a.node();
  return make_op(a.shape(), std::move(out), {a},
                 [pa](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs || !pa->requires_grad) return;
                   auto& buf = g.of(*pa);
                   for (size_t i = 0; i < gs->size(); ++i) {
                     const double y = self.value[i];
                     buf[i] += (*gs)[i] * y * (1.0 - y);
                   }
                 });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape().size() != 2 || b.shape().size() != 2)
    throw ShapeMismatch("matmul: rank-2 operands required");
  const int64_t m = a.shape()[0], k = a.shape()[1];
  const int64_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) throw ShapeMismatch("matmul: inner dimensions differ");
  const double* ap = a.node()->value.data();
  const double* bp = b.node()->value.data();
  std::vector<double> out(static_cast<size_t>(m * n), 0.0);
  for (int64_t i = 0; i < m; ++i) {
    double* orow = out.data() + i * n;
    const double* arow = ap + i * k;
    for (int64_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const double* brow = bp + kk * n;
      for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  auto pa = a.node(), pb = b.node();
  return make_op({m, n}, std::move(out), {a, b},
                 [pa, pb, m, k, n](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs) return;
                   const double* gp = gs->data();
                   if (pa->requires_grad) {
                     // dA = G * B^T
                     auto& buf = g.of(*pa);
                     const double* bp = pb->value.data();
                     for (int64_t i = 0; i < m; ++i) {
                       const double* grow = gp + i * n;
                       double* arow = buf.data() + i * k;
                       for (int64_t kk = 0; kk < k; ++kk) {
                         const double* brow = bp + kk * n;
                         double s = 0.0;
                         for (int64_t j = 0; j < n; ++j) s += grow[j] * brow[j];
                         arow[kk] += s;
                       }
                     }
                   }
                   if (pb->requires_grad) {
                     // dB = A^T * G
                     auto& buf = g.of(*pb);
                     const double* ap2 = pa->value.data();
                     for (int64_t kk = 0; kk < k; ++kk) {
                       double* brow = buf.data() + kk * n;
                       for (int64_t i = 0; i < m; ++i) {
                         const double av = ap2[i * k + kk];
                         const double* grow = gp + i * n;
                         for (int64_t j = 0; j < n; ++j)
                           brow[j] += av * grow[j];
                       }
                     }
                   }
                 });
}

Tensor concat_last(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InvalidArgument("concat_last: no inputs");
  const auto& s0 = parts[0].shape();
  if (s0.empty()) throw ShapeMismatch("concat_last: rank-0 input");
  int64_t rows = 1;
  for (size_t d = 0; d + 1 < s0.size(); ++d) rows *= s0[d];
  int64_t total_last = 0;
  std::vector<int64_t> widths;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s.size() != s0.size() ||
        !std::equal(s.begin(), s.end() - 1, s0.begin()))
      throw ShapeMismatch("concat_last: leading dimensions differ");
    widths.push_back(s.back());
    total_last += s.back();
  }
  std::vector<int64_t> out_shape = s0;
  out_shape.back() = total_last;
  std::vector<double> out(static_cast<size_t>(rows * total_last));
  int64_t off = 0;
  for (size_t pi = 0; pi < parts.size(); ++pi) {
    const double* src = parts[pi].node()->value.data();
    const int64_t w = widths[pi];
    for (int64_t r = 0; r < rows; ++r)
      std::copy(src + r * w, src + (r + 1) * w,
                out.data() + r * total_last + off);
    off += w;
  }
  std::vector<NodePtr> pnodes;
  for (const auto& p : parts) pnodes.push_back(p.node());
  return make_op(
      std::move(out_shape), std::move(out), parts,
      [pnodes, widths, rows, total_last](const TensorNode& self, Gradients& g) {
        const auto* gs = g.find(self);
        if (!gs) return;
        int64_t off = 0;
        for (size_t pi = 0; pi < pnodes.size(); ++pi) {
          const int64_t w = widths[pi];
          if (pnodes[pi]->requires_grad) {
            auto& buf = g.of(*pnodes[pi]);
            for (int64_t r = 0; r < rows; ++r) {
              const double* src = gs->data() + r * total_last + off;
              double* dst = buf.data() + r * w;
              for (int64_t j = 0; j < w; ++j) dst[j] += src[j];
            }
          }
          off += w;
        }
      });
}

Tensor row(const Tensor& a, int64_t r) {
  if (a.shape().size() != 2) throw ShapeMismatch("row: rank-2 input required");
  const int64_t rows = a.shape()[0], cols = a.shape()[1];
  if (r < 0 || r >= rows) throw InvalidArgument("row: index out of range");
  const double* src = a.node()->value.data() + r * cols;
  std::vector<double> out(src, src + cols);
  auto pa = a.node();
  return make_op({1, cols}, std::move(out), {a},
                 [pa, r, cols](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs || !pa->requires_grad) return;
                   auto& buf = g.of(*pa);
                   double* dst = buf.data() + r * cols;
                   for (int64_t j = 0; j < cols; ++j) dst[j] += (*gs)[j];
                 });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  if (rows.empty()) throw InvalidArgument("stack_rows: no inputs");
  const auto& s0 = rows[0].shape();
  if (s0.size() != 2 || s0[0] != 1)
    throw ShapeMismatch("stack_rows: inputs must be [1, C]");
  const int64_t cols = s0[1];
  for (const auto& t : rows)
    if (t.shape() != s0) throw ShapeMismatch("stack_rows: shapes differ");
  const int64_t n = static_cast<int64_t>(rows.size());
  std::vector<double> out(static_cast<size_t>(n * cols));
  for (int64_t i = 0; i < n; ++i)
    std::copy(rows[i].node()->value.begin(), rows[i].node()->value.end(),
              out.begin() + i * cols);
  std::vector<NodePtr> pnodes;
  for (const auto& t : rows) pnodes.push_back(t.node());
  return make_op({n, cols}, std::move(out), rows,
                 [pnodes, cols](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs) return;
                   for (size_t i = 0; i < pnodes.size(); ++i) {
                     if (!pnodes[i]->requires_grad) continue;
                     auto& buf = g.of(*pnodes[i]);
                     const double* src = gs->data() + i * cols;
                     for (int64_t j = 0; j < cols; ++j) buf[j] += src[j];
                   }
                 });
}

// ---------------------------------------------------------------------------
// Convolution kernels. The 3x3x3 convolution is decomposed into 27 shifted
// channel-mixing passes; each pass walks contiguous pixel rows so the inner
// loop is a dense [Ci] x [Ci,Co] product with register-resident accumulators.
// ---------------------------------------------------------------------------

namespace {

// Two accumulator layouts below compute the same thing; which one the
// compiler turns into clean FMA code depends on the channel width, so the
// dispatcher picks per width (measured, not guessed).
template <int CO>
void acc_rows_flat4(double* __restrict op, const double* __restrict xp,
                    int64_t n, int64_t cin, const double* __restrict wk) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* x0 = xp + i * cin;
    double* o0 = op + i * CO;
    double acc[4][CO];
    for (int p = 0; p < 4; ++p)
      for (int c = 0; c < CO; ++c) acc[p][c] = o0[p * CO + c];
    for (int64_t ci = 0; ci < cin; ++ci) {
      const double* wr = wk + ci * CO;
      for (int p = 0; p < 4; ++p) {
        const double a = x0[p * cin + ci];
        for (int c = 0; c < CO; ++c) acc[p][c] += a * wr[c];
      }
    }
    for (int p = 0; p < 4; ++p)
      for (int c = 0; c < CO; ++c) o0[p * CO + c] = acc[p][c];
  }
  for (; i < n; ++i) {
    const double* x0 = xp + i * cin;
    double* o0 = op + i * CO;
    double acc[CO];
    for (int c = 0; c < CO; ++c) acc[c] = o0[c];
    for (int64_t ci = 0; ci < cin; ++ci) {
      const double a = x0[ci];
      const double* wr = wk + ci * CO;
      for (int c = 0; c < CO; ++c) acc[c] += a * wr[c];
    }
    for (int c = 0; c < CO; ++c) o0[c] = acc[c];
  }
}

// Both channel counts as template constants: with the inner extents known the
// compiler keeps every accumulator lane in a register. The [V][8] accumulator
// split matches one vector register per innermost loop.
template <int CIN, int CO>
void acc_rows_fix(double* __restrict op, const double* __restrict xp,
                  int64_t n, const double* __restrict wk) {
  static_assert(CO % 8 == 0);
  constexpr int V = CO / 8;
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* x0 = xp + i * CIN;
    double* o0 = op + i * CO;
    double acc[4][V][8];
    for (int p = 0; p < 4; ++p)
      for (int v = 0; v < V; ++v)
        for (int c = 0; c < 8; ++c) acc[p][v][c] = o0[p * CO + v * 8 + c];
    for (int ci = 0; ci < CIN; ++ci) {
      const double* wr = wk + ci * CO;
      for (int p = 0; p < 4; ++p) {
        const double a = x0[p * CIN + ci];
        for (int v = 0; v < V; ++v)
          for (int c = 0; c < 8; ++c) acc[p][v][c] += a * wr[v * 8 + c];
      }
    }
    for (int p = 0; p < 4; ++p)
      for (int v = 0; v < V; ++v)
        for (int c = 0; c < 8; ++c) o0[p * CO + v * 8 + c] = acc[p][v][c];
  }
  for (; i < n; ++i) {
    const double* x0 = xp + i * CIN;
    double* o0 = op + i * CO;
    double acc[V][8];
    for (int v = 0; v < V; ++v)
      for (int c = 0; c < 8; ++c) acc[v][c] = o0[v * 8 + c];
    for (int ci = 0; ci < CIN; ++ci) {
      const double a = x0[ci];
      const double* wr = wk + ci * CO;
      for (int v = 0; v < V; ++v)
        for (int c = 0; c < 8; ++c) acc[v][c] += a * wr[v * 8 + c];
    }
    for (int v = 0; v < V; ++v)
      for (int c = 0; c < 8; ++c) o0[v * 8 + c] = acc[v][c];
  }
}

void acc_rows_co1(double* __restrict op, const double* __restrict xp,
                  int64_t n, int64_t cin, const double* __restrict wk) {
  for (int64_t i = 0; i < n; ++i) {
    const double* x0 = xp + i * cin;
    double s = 0.0;
    for (int64_t ci = 0; ci < cin; ++ci) s += x0[ci] * wk[ci];
    op[i] += s;
  }
}

void acc_rows_generic(double* op, const double* xp, int64_t n, int64_t cin,
                      int64_t co, const double* wk) {
  for (int64_t i = 0; i < n; ++i) {
    const double* x0 = xp + i * cin;
    double* o0 = op + i * co;
    for (int64_t ci = 0; ci < cin; ++ci) {
      const double a = x0[ci];
      const double* wr = wk + ci * co;
      for (int64_t c = 0; c < co; ++c) o0[c] += a * wr[c];
    }
  }
}

void acc_rows(double* op, const double* xp, int64_t n, int64_t cin, int64_t co,
              const double* wk) {
  // Specialised clones for the channel pairs the video branches hit in the
  // hot path; anything else goes through the generic loop.
  if (co == 16) {
    switch (cin) {
      case 16: acc_rows_fix<16, 16>(op, xp, n, wk); return;
      case 3:  acc_rows_fix<3, 16>(op, xp, n, wk); return;
      case 32: acc_rows_fix<32, 16>(op, xp, n, wk); return;
      case 1:  acc_rows_fix<1, 16>(op, xp, n, wk); return;
      default: break;
    }
  } else if (co == 32) {
    if (cin == 16) {
      acc_rows_fix<16, 32>(op, xp, n, wk);
      return;
    }
    acc_rows_flat4<32>(op, xp, n, cin, wk);
    return;
  } else if (co == 1) {
    acc_rows_co1(op, xp, n, cin, wk);
    return;
  }
  acc_rows_generic(op, xp, n, cin, co, wk);
}

// One full "same"-padded pass: out[t,y,x,:] += sum over the 27 taps of
// in[t+st, y+sy, x+sx, :] * w[tap]. Zero padding falls out of the clamped
// index ranges. The time slab is the outer loop and the pixel row sits
// outside the kx taps, so rows are revisited while still cache-resident
// instead of streaming the whole tensor once per tap.
void conv_pass(const double* in, double* out, int64_t T, int64_t H, int64_t W,
               int64_t cin, int64_t co, const double* w) {
  for (int64_t t = 0; t < T; ++t) {
    double* oslab = out + t * H * W * co;
    for (int kt = 0; kt < 3; ++kt) {
      const int64_t ti = t + kt - 1;
      if (ti < 0 || ti >= T) continue;
      const double* islab = in + ti * H * W * cin;
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = ky - 1;
        const int64_t y0 = std::max<int64_t>(0, -sy);
        const int64_t y1 = std::min<int64_t>(H, H - sy);
        for (int64_t y = y0; y < y1; ++y) {
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = kx - 1;
            const int64_t x0 = std::max<int64_t>(0, -sx);
            const int64_t xn = std::min<int64_t>(W, W - sx) - x0;
            if (xn <= 0) continue;
            const double* wk = w + (((kt * 3 + ky) * 3 + kx) * cin) * co;
            acc_rows(oslab + (y * W + x0) * co,
                     islab + ((y + sy) * W + (x0 + sx)) * cin, xn, cin, co,
                     wk);
          }
        }
      }
    }
  }
}

// Rank-1 weight-gradient accumulation for one shift: gw[ci,co] +=
// sum over positions of x[p+shift][ci] * gout[p][co]. Positions unrolled by 4.
template <int CO>
void wgrad_rows_fixed(double* __restrict gw, const double* __restrict xp,
                      const double* __restrict gp, int64_t n, int64_t cin) {
  int64_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* x0 = xp + i * cin;
    const double* g0 = gp + i * CO;
    for (int64_t ci = 0; ci < cin; ++ci) {
      const double a0 = x0[ci];
      const double a1 = x0[cin + ci];
      const double a2 = x0[2 * cin + ci];
      const double a3 = x0[3 * cin + ci];
      double* wr = gw + ci * CO;
      for (int c = 0; c < CO; ++c)
        wr[c] += a0 * g0[c] + a1 * g0[CO + c] + a2 * g0[2 * CO + c] +
                 a3 * g0[3 * CO + c];
    }
  }
  for (; i < n; ++i) {
    const double* x0 = xp + i * cin;
    const double* g0 = gp + i * CO;
    for (int64_t ci = 0; ci < cin; ++ci) {
      const double a0 = x0[ci];
      double* wr = gw + ci * CO;
      for (int c = 0; c < CO; ++c) wr[c] += a0 * g0[c];
    }
  }
}

void wgrad_rows_generic(double* gw, const double* xp, const double* gp,
                        int64_t n, int64_t cin, int64_t co) {
  for (int64_t i = 0; i < n; ++i) {
    const double* x0 = xp + i * cin;
    const double* g0 = gp + i * co;
    for (int64_t ci = 0; ci < cin; ++ci) {
      const double a = x0[ci];
      double* wr = gw + ci * co;
      for (int64_t c = 0; c < co; ++c) wr[c] += a * g0[c];
    }
  }
}

void wgrad_rows(double* gw, const double* xp, const double* gp, int64_t n,
                int64_t cin, int64_t co) {
  switch (co) {
    case 32: wgrad_rows_fixed<32>(gw, xp, gp, n, cin); break;
    case 16: wgrad_rows_fixed<16>(gw, xp, gp, n, cin); break;
    case 1:  wgrad_rows_fixed<1>(gw, xp, gp, n, cin); break;
    default: wgrad_rows_generic(gw, xp, gp, n, cin, co); break;
  }
}

// Weight gradient for all 27 taps in one slab-ordered sweep; gw is laid out
// [3,3,3,cin,co] like the weights themselves.
void conv_wgrad_pass(const double* x, const double* gout, double* gw,
                     int64_t T, int64_t H, int64_t W, int64_t cin,
                     int64_t co) {
  for (int64_t t = 0; t < T; ++t) {
    const double* gslab = gout + t * H * W * co;
    for (int kt = 0; kt < 3; ++kt) {
      const int64_t ti = t + kt - 1;
      if (ti < 0 || ti >= T) continue;
      const double* xslab = x + ti * H * W * cin;
      for (int ky = 0; ky < 3; ++ky) {
        const int sy = ky - 1;
        const int64_t y0 = std::max<int64_t>(0, -sy);
        const int64_t y1 = std::min<int64_t>(H, H - sy);
        for (int64_t y = y0; y < y1; ++y) {
          for (int kx = 0; kx < 3; ++kx) {
            const int sx = kx - 1;
            const int64_t x0 = std::max<int64_t>(0, -sx);
            const int64_t xn = std::min<int64_t>(W, W - sx) - x0;
            if (xn <= 0) continue;
            double* gwk = gw + (((kt * 3 + ky) * 3 + kx) * cin) * co;
            wgrad_rows(gwk, xslab + ((y + sy) * W + (x0 + sx)) * cin,
                       gslab + (y * W + x0) * co, xn, cin, co);
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b) {
  const auto& xs = x.shape();
  const auto& ws = w.shape();
  if (xs.size() != 4) throw ShapeMismatch("conv3d: input must be [T,H,W,C]");
  if (ws.size() != 5 || ws[0] != 3 || ws[1] != 3 || ws[2] != 3)
    throw ShapeMismatch("conv3d: weights must be [3,3,3,Ci,Co]");
  const int64_t T = xs[0], H = xs[1], W = xs[2], Ci = xs[3];
  const int64_t Co = ws[4];
  if (ws[3] != Ci) throw ShapeMismatch("conv3d: channel count mismatch");
  if (b.shape().size() != 1 || b.shape()[0] != Co)
    throw ShapeMismatch("conv3d: bias must be [Co]");

  const double* xp = x.node()->value.data();
  const double* wp = w.node()->value.data();
  const double* bp = b.node()->value.data();
  std::vector<double> out(static_cast<size_t>(T * H * W * Co));
  // Seed with the bias, then accumulate the 27 shifted taps.
  for (int64_t p = 0; p < T * H * W; ++p)
    for (int64_t c = 0; c < Co; ++c) out[p * Co + c] = bp[c];
  conv_pass(xp, out.data(), T, H, W, Ci, Co, wp);

  auto px = x.node(), pw = w.node(), pb = b.node();
  return make_op(
      {T, H, W, Co}, std::move(out), {x, w, b},
      [px, pw, pb, T, H, W, Ci, Co](const TensorNode& self, Gradients& g) {
        const auto* gs = g.find(self);
        if (!gs) return;
        const double* gp = gs->data();
        if (pb->requires_grad) {
          auto& gb = g.of(*pb);
          for (int64_t p = 0; p < T * H * W; ++p)
            for (int64_t c = 0; c < Co; ++c) gb[c] += gp[p * Co + c];
        }
        if (pw->requires_grad) {
          auto& gw = g.of(*pw);
          conv_wgrad_pass(px->value.data(), gp, gw.data(), T, H, W, Ci, Co);
        }
        if (px->requires_grad) {
          // dX is itself a "same"-padded convolution of the output gradient
          // with the channel-transposed, spatially mirrored kernel, so the
          // forward pass driver is reused on a remapped weight table.
          auto& gx = g.of(*px);
          const double* wp2 = pw->value.data();
          std::vector<double> wt(static_cast<size_t>(27 * Co * Ci));
          for (int kt = 0; kt < 3; ++kt)
            for (int ky = 0; ky < 3; ++ky)
              for (int kx = 0; kx < 3; ++kx) {
                const double* src =
                    wp2 + (((kt * 3 + ky) * 3 + kx) * Ci) * Co;
                double* dst =
                    wt.data() +
                    ((((2 - kt) * 3 + (2 - ky)) * 3 + (2 - kx)) * Co) * Ci;
                for (int64_t ci = 0; ci < Ci; ++ci)
                  for (int64_t c = 0; c < Co; ++c)
                    dst[c * Ci + ci] = src[ci * Co + c];
              }
          conv_pass(gp, gx.data(), T, H, W, Co, Ci, wt.data());
        }
      });
}

Tensor avg_pool_spatial(const Tensor& x) {
  const auto& xs = x.shape();
  if (xs.size() != 4)
    throw ShapeMismatch("avg_pool_spatial: input must be [T,H,W,C]");
  const int64_t T = xs[0], H = xs[1], W = xs[2], C = xs[3];
  if (H % 2 != 0 || W % 2 != 0)
    throw ShapeMismatch("avg_pool_spatial: H and W must be even");
  const int64_t Ho = H / 2, Wo = W / 2;
  const double* xp = x.node()->value.data();
  std::vector<double> out(static_cast<size_t>(T * Ho * Wo * C));
  for (int64_t t = 0; t < T; ++t)
    for (int64_t y = 0; y < Ho; ++y)
      for (int64_t xw = 0; xw < Wo; ++xw) {
        const double* r0 = xp + ((t * H + 2 * y) * W + 2 * xw) * C;
        const double* r1 = xp + ((t * H + 2 * y + 1) * W + 2 * xw) * C;
        double* op = out.data() + ((t * Ho + y) * Wo + xw) * C;
        for (int64_t c = 0; c < C; ++c)
          op[c] = 0.25 * (r0[c] + r0[C + c] + r1[c] + r1[C + c]);
      }
  auto px = x.node();
  return make_op({T, Ho, Wo, C}, std::move(out), {x},
                 [px, T, H, W, C, Ho, Wo](const TensorNode& self,
                                          Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs || !px->requires_grad) return;
                   auto& gx = g.of(*px);
                   for (int64_t t = 0; t < T; ++t)
                     for (int64_t y = 0; y < Ho; ++y)
                       for (int64_t xw = 0; xw < Wo; ++xw) {
                         const double* gp =
                             gs->data() + ((t * Ho + y) * Wo + xw) * C;
                         double* r0 =
                             gx.data() + ((t * H + 2 * y) * W + 2 * xw) * C;
                         double* r1 =
                             gx.data() + ((t * H + 2 * y + 1) * W + 2 * xw) * C;
                         for (int64_t c = 0; c < C; ++c) {
                           const double v = 0.25 * gp[c];
                           r0[c] += v;
                           r0[C + c] += v;
                           r1[c] += v;
                           r1[C + c] += v;
                         }
                       }
                 });
}

Tensor global_pool_spatial(const Tensor& x) {
  const auto& xs = x.shape();
  if (xs.size() != 4)
    throw ShapeMismatch("global_pool_spatial: input must be [T,H,W,C]");
  const int64_t T = xs[0], H = xs[1], W = xs[2], C = xs[3];
  const double inv = 1.0 / static_cast<double>(H * W);
  const double* xp = x.node()->value.data();
  std::vector<double> out(static_cast<size_t>(T * C), 0.0);
  for (int64_t t = 0; t < T; ++t) {
    double* op = out.data() + t * C;
    const double* base = xp + t * H * W * C;
    for (int64_t p = 0; p < H * W; ++p)
      for (int64_t c = 0; c < C; ++c) op[c] += base[p * C + c];
    for (int64_t c = 0; c < C; ++c) op[c] *= inv;
  }
  auto px = x.node();
  return make_op({T, C}, std::move(out), {x},
                 [px, T, H, W, C, inv](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs || !px->requires_grad) return;
                   auto& gx = g.of(*px);
                   for (int64_t t = 0; t < T; ++t) {
                     const double* gp = gs->data() + t * C;
                     double* base = gx.data() + t * H * W * C;
                     for (int64_t p = 0; p < H * W; ++p)
                       for (int64_t c = 0; c < C; ++c)
                         base[p * C + c] += gp[c] * inv;
                   }
                 });
}

Tensor mul_mask(const Tensor& x, const Tensor& mask) {
  const auto& xs = x.shape();
  const auto& ms = mask.shape();
  if (xs.size() != 4 || ms.size() != 4)
    throw ShapeMismatch("mul_mask: inputs must be [T,H,W,C] and [T,H,W,1]");
  if (ms[3] != 1 || ms[0] != xs[0] || ms[1] != xs[1] || ms[2] != xs[2])
    throw ShapeMismatch("mul_mask: mask shape must match input with C=1");
  const int64_t P = xs[0] * xs[1] * xs[2], C = xs[3];
  const double* xp = x.node()->value.data();
  const double* mp = mask.node()->value.data();
  std::vector<double> out(static_cast<size_t>(P * C));
  for (int64_t p = 0; p < P; ++p) {
    const double m = mp[p];
    for (int64_t c = 0; c < C; ++c) out[p * C + c] = xp[p * C + c] * m;
  }
  auto px = x.node(), pm = mask.node();
  return make_op(xs, std::move(out), {x, mask},
                 [px, pm, P, C](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs) return;
                   const double* gp = gs->data();
                   if (px->requires_grad) {
                     auto& gx = g.of(*px);
                     const double* mp = pm->value.data();
                     for (int64_t p = 0; p < P; ++p) {
                       const double m = mp[p];
                       for (int64_t c = 0; c < C; ++c)
                         gx[p * C + c] += gp[p * C + c] * m;
                     }
                   }
                   if (pm->requires_grad) {
                     auto& gm = g.of(*pm);
                     const double* xp2 = px->value.data();
                     for (int64_t p = 0; p < P; ++p) {
                       double s = 0.0;
                       for (int64_t c = 0; c < C; ++c)
                         s += gp[p * C + c] * xp2[p * C + c];
                       gm[p] += s;
                     }
                   }
                 });
}

Tensor dropout(const Tensor& x, double rate, bool training, uint64_t seed) {
  if (rate < 0.0 || rate >= 1.0)
    throw InvalidArgument("dropout: rate must be in [0, 1)");
  if (!training || rate == 0.0) {
    // Identity pass-through that still participates in the graph.
    return scale(x, 1.0);
  }
  const auto& xv = x.node()->value;
  const double keep = 1.0 - rate;
  const double inv_keep = 1.0 / keep;
  Rng rng(seed);
  auto mask = std::make_shared<std::vector<double>>(xv.size());
  std::vector<double> out(xv.size());
  for (size_t i = 0; i < xv.size(); ++i) {
    const double m = rng.uniform01() < keep ? inv_keep : 0.0;
    (*mask)[i] = m;
    out[i] = xv[i] * m;
  }
  auto px = x.node();
  return make_op(x.shape(), std::move(out), {x},
                 [px, mask](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs || !px->requires_grad) return;
                   auto& gx = g.of(*px);
                   for (size_t i = 0; i < gs->size(); ++i)
                     gx[i] += (*gs)[i] * (*mask)[i];
                 });
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mse");
  const auto& pv = pred.node()->value;
  const auto& tv = target.node()->value;
  if (pv.empty()) throw InvalidArgument("mse: empty input");
  const double inv_n = 1.0 / static_cast<double>(pv.size());
  double s = 0.0;
  for (size_t i = 0; i < pv.size(); ++i) {
    const double d = pv[i] - tv[i];
    s += d * d;
  }
  auto pp = pred.node(), pt = target.node();
  return make_op({1}, {s * inv_n}, {pred, target},
                 [pp, pt, inv_n](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs) return;
                   const double go = (*gs)[0];
                   if (pp->requires_grad) {
                     auto& gp = g.of(*pp);
                     for (size_t i = 0; i < gp.size(); ++i)
                       gp[i] += go * 2.0 * inv_n *
                                (pp->value[i] - pt->value[i]);
                   }
                   if (pt->requires_grad) {
                     auto& gt = g.of(*pt);
                     for (size_t i = 0; i < gt.size(); ++i)
                       gt[i] -= go * 2.0 * inv_n *
                                (pp->value[i] - pt->value[i]);
                   }
                 });
}

Tensor mae(const Tensor& pred, const Tensor& target) {
  require_same_shape(pred, target, "mae");
  const auto& pv = pred.node()->value;
  const auto& tv = target.node()->value;
  if (pv.empty()) throw InvalidArgument("mae: empty input");
  const double inv_n = 1.0 / static_cast<double>(pv.size());
  double s = 0.0;
  for (size_t i = 0; i < pv.size(); ++i) s += std::abs(pv[i] - tv[i]);
  auto pp = pred.node(), pt = target.node();
  return make_op({1}, {s * inv_n}, {pred, target},
                 [pp, pt, inv_n](const TensorNode& self, Gradients& g) {
                   const auto* gs = g.find(self);
                   if (!gs) return;
                   const double go = (*gs)[0];
                   if (pp->requires_grad) {
                     auto& gp = g.of(*pp);
                     for (size_t i = 0; i < gp.size(); ++i) {
                       const double d = pp->value[i] - pt->value[i];
                       const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                       gp[i] += go * inv_n * sgn;
                     }
                   }
                   if (pt->requires_grad) {
                     auto& gt = g.of(*pt);
                     for (size_t i = 0; i < gt.size(); ++i) {
                       const double d = pp->value[i] - pt->value[i];
                       const double sgn = d > 0.0 ? 1.0 : (d < 0.0 ? -1.0 : 0.0);
                       gt[i] -= go * inv_n * sgn;
                     }
                   }
                 });
}

}  // namespace pulsekit
