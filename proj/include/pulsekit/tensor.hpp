#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <unordered_map>
#include <vector>

namespace pulsekit {

class Gradients;
struct TensorNode;
using NodePtr = std::shared_ptr<TensorNode>;

// One vertex of a reverse-mode graph. Values are 64-bit floats, row-major.
// backward_fn reads d(loss)/d(self) out of the Gradients context and
// accumulates d(loss)/d(parent) for each parent it cares about.
struct TensorNode {
  std::vector<int64_t> shape;
  std::vector<double> value;
  bool requires_grad = false;
  std::vector<double> grad;  // leaf sink, committed by backward()
  std::vector<NodePtr> parents;
  std::function<void(const TensorNode&, Gradients&)> backward_fn;

  int64_t numel() const {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
  }
};

// Handle with shared ownership of a node; cheap to copy.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(NodePtr node) : node_(std::move(node)) {}

  static Tensor zeros(std::vector<int64_t> shape, bool requires_grad = false);
  static Tensor full(std::vector<int64_t> shape, double v,
                     bool requires_grad = false);
  static Tensor from(std::vector<int64_t> shape, std::vector<double> value,
                     bool requires_grad = false);

  bool defined() const { return static_cast<bool>(node_); }
  const std::vector<int64_t>& shape() const { return node_->shape; }
  int64_t numel() const { return node_->numel(); }
  std::vector<double>& data() { return node_->value; }
  const std::vector<double>& data() const { return node_->value; }
  bool requires_grad() const { return node_->requires_grad; }
  std::vector<double>& grad() { return node_->grad; }
  const std::vector<double>& grad() const { return node_->grad; }
  double item() const { return node_->value.at(0); }
  NodePtr node() const { return node_; }

 private:
  NodePtr node_;
};

// Per-pass gradient buffers keyed by node, so parameter nodes stay read-only
// while a pass runs; backward() commits leaf buffers into .grad afterwards.
class Gradients {
 public:
  std::vector<double>& of(const TensorNode& n) {
    auto [it, inserted] = bufs_.try_emplace(&n);
    if (inserted) it->second.assign(static_cast<size_t>(n.numel()), 0.0);
    return it->second;
  }
  const std::vector<double>* find(const TensorNode& n) const {
    auto it = bufs_.find(&n);
    return it == bufs_.end() ? nullptr : &it->second;
  }

 private:
  std::unordered_map<const TensorNode*, std::vector<double>> bufs_;
};

// Reverse-mode sweep from a scalar root. Accumulates (+=) into the .grad of
// every reachable leaf with requires_grad. Throws NonFiniteValue if the root
// value or any committed gradient is not finite.
void backward(const Tensor& root);

// Convenience for parameter handling.
void zero_grad(std::vector<Tensor>& params);
bool all_finite(const std::vector<double>& v);

}  // namespace pulsekit
