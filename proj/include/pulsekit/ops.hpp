#pragma once

#include <vector>

#include "pulsekit/tensor.hpp"

namespace pulsekit {

// Elementwise; shapes must match exactly.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
Tensor one_minus(const Tensor& a);  // 1 - a
Tensor tanh_op(const Tensor& a);
Tensor sigmoid_op(const Tensor& a);

// [m,k] x [k,n] -> [m,n].
Tensor matmul(const Tensor& a, const Tensor& b);

// Concatenate along the last axis; all other dims must match.
Tensor concat_last(const std::vector<Tensor>& parts);
// Row r of a 2-D tensor as [1, C].
Tensor row(const Tensor& a, int64_t r);
// Stack T tensors of shape [1, C] into [T, C].
Tensor stack_rows(const std::vector<Tensor>& rows);

// 3x3x3 convolution over x[T,H,W,Ci] with w[3,3,3,Ci,Co], b[Co], zero ("same")
// padding on every axis. Direct method; no transform-domain shortcuts.
Tensor conv3d(const Tensor& x, const Tensor& w, const Tensor& b);

// 2x2 spatial mean pool; H and W must be even. Time and channels unchanged.
Tensor avg_pool_spatial(const Tensor& x);

// [T,H,W,C] -> [T,C] spatial mean.
Tensor global_pool_spatial(const Tensor& x);

// x[T,H,W,C] * mask[T,H,W,1], mask broadcast over channels.
Tensor mul_mask(const Tensor& x, const Tensor& mask);

// Inverted dropout: keep with probability 1-rate and scale kept values by
// 1/(1-rate) so the expectation is unchanged; identity when not training.
Tensor dropout(const Tensor& x, double rate, bool training, uint64_t seed);

// Mean losses over all elements; scalar output.
Tensor mse(const Tensor& pred, const Tensor& target);
Tensor mae(const Tensor& pred, const Tensor& target);

}  // namespace pulsekit
