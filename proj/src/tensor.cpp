#include "pulsekit/tensor.hpp"

#include <cmath>
#include <unordered_set>

#include "pulsekit/errors.hpp"

namespace pulsekit {

Tensor Tensor::zeros(std::vector<int64_t> shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(std::vector<int64_t> shape, double v, bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value.assign(static_cast<size_t>(n->numel()), v);
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

Tensor Tensor::from(std::vector<int64_t> shape, std::vector<double> value,
                    bool requires_grad) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  if (n->numel() != static_cast<int64_t>(n->value.size()))
    throw ShapeMismatch("Tensor::from: value size does not match shape");
  n->requires_grad = requires_grad;
  return Tensor(std::move(n));
}

bool all_finite(const std::vector<double>& v) {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void backward(const Tensor& root) {
  TensorNode* r = root.node().get();
  if (r == nullptr) throw InvalidArgument("backward: undefined tensor");
  if (r->numel() != 1)
    throw ShapeMismatch("backward: root must be a scalar");
  if (!std::isfinite(r->value[0]))
    throw NonFiniteValue("backward: root value is not finite");

  // Iterative post-order DFS; children (parents in graph terms) first.
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> seen;
  std::vector<std::pair<TensorNode*, size_t>> stack;
  stack.emplace_back(r, 0);
  seen.insert(r);
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      TensorNode* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  Gradients g;
  g.of(*r)[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* node = *it;
    if (node->backward_fn && g.find(*node) != nullptr)
      node->backward_fn(*node, g);
  }

  // Commit leaf gradients in discovery order (deterministic: graph
  // construction order fixes the DFS).
  for (TensorNode* node : order) {
    if (!node->requires_grad || node->backward_fn) continue;
    const std::vector<double>* buf = g.find(*node);
    if (buf == nullptr) continue;
    if (!all_finite(*buf))
      throw NonFiniteValue("backward: non-finite gradient");
    if (node->grad.empty()) node->grad.assign(buf->size(), 0.0);
    for (size_t i = 0; i < buf->size(); ++i) node->grad[i] += (*buf)[i];
  }
}

void zero_grad(std::vector<Tensor>& params) {
  for (Tensor& p : params) {
    p.grad().assign(static_cast<size_t>(p.numel()), 0.0);
  }
}

}  // namespace pulsekit
