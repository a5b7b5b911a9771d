#pragma once

#include <cstdint>
#include <vector>

#include "pulsekit/tensor.hpp"

namespace pulsekit {

struct AdamConfig {
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Reads each parameter's accumulated .grad() at
// step() time; an empty gradient is treated as zero.
class Adam {
 public:
  Adam(std::vector<Tensor> params, AdamConfig cfg = {});

  void step();
  int64_t step_count() const { return t_; }
  std::vector<Tensor>& params() { return params_; }

 private:
  std::vector<Tensor> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  int64_t t_ = 0;
};

}  // namespace pulsekit
