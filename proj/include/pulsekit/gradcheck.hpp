#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "pulsekit/tensor.hpp"

namespace pulsekit {

// Compares analytic gradients against central finite differences for every
// element of every leaf. `rebuild` must re-run the forward pass from the
// current leaf values and return the scalar loss. Returns the worst relative
// error, |a - n| / max(|a|, |n|, 1e-6).
inline double gradcheck_max_rel(const std::function<Tensor()>& rebuild,
                                std::vector<Tensor> leaves,
                                double step = 1e-5) {
  Tensor loss = rebuild();
  zero_grad(leaves);
  backward(loss);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(leaves.size());
  for (auto& leaf : leaves) analytic.push_back(leaf.grad());

  double worst = 0.0;
  for (size_t l = 0; l < leaves.size(); ++l) {
    auto& vals = leaves[l].data();
    for (size_t i = 0; i < vals.size(); ++i) {
      const double orig = vals[i];
      vals[i] = orig + step;
      const double up = rebuild().item();
      vals[i] = orig - step;
      const double down = rebuild().item();
      vals[i] = orig;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[l].empty() ? 0.0 : analytic[l][i];
      const double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), 1e-6});
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace pulsekit
