#pragma once

#include <cstdint>
#include <vector>

#include "pulsekit/rng.hpp"
#include "pulsekit/tensor.hpp"

namespace pulsekit {

// Gated recurrent unit parameters. Update rule per step, with x the input row
// and h the previous state:
//   z = sigmoid(x Wz + h Uz + bz)        keep gate
//   r = sigmoid(x Wr + h Ur + br)        reset gate
//   c = act(x Wc + (r*h) Uc + bc)        candidate
//   h' = z*h + (1-z)*c
// act is tanh unless linear_candidate is set, in which case it is identity.
struct GruParams {
  int64_t input_size = 0;
  int64_t hidden_size = 0;
  bool linear_candidate = false;
  Tensor Wz, Uz, bz;
  Tensor Wr, Ur, br;
  Tensor Wc, Uc, bc;

  // Parameters in a fixed order for optimizers and checkpoints.
  std::vector<Tensor> all() const {
    return {Wz, Uz, bz, Wr, Ur, br, Wc, Uc, bc};
  }
};

// Weights drawn from U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
GruParams make_gru_params(int64_t input_size, int64_t hidden_size,
                          bool linear_candidate, Rng& rng);

// Runs the recurrence over x[T, input_size] from a zero initial state and
// returns the state sequence [T, hidden_size]. With reverse set, the scan
// consumes the input back to front but the output keeps input time order
// (row t holds the state after consuming row t in the backward scan).
Tensor gru_forward(const GruParams& p, const Tensor& x, bool reverse = false);

// Forward and backward scans concatenated per step: [T, 2*hidden_size].
Tensor bigru_forward(const GruParams& fwd, const GruParams& bwd,
                     const Tensor& x);

}  // namespace pulsekit
