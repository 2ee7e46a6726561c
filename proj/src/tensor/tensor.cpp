// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include "choreo/tensor/tensor.hpp"

#include <algorithm>
#include <unordered_set>
#include <utility>

#include "autograd_internal.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

namespace {
thread_local bool t_grad_enabled = true;
}  // namespace

bool grad_enabled() { return t_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(t_grad_enabled) { t_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { t_grad_enabled = previous_; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), Real{0}, requires_grad);
}

Tensor Tensor::full(Shape shape, Real value, bool requires_grad) {
  const std::size_t n = shape_numel(shape);
  return from_data(std::move(shape), std::vector<Real>(n, value), requires_grad);
}

Tensor Tensor::from_data(Shape shape, std::vector<Real> data, bool requires_grad) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("tensor data length " + std::to_string(data.size()) +
                     " does not match shape " + shape_str(shape));
  }
  auto node = std::make_shared<detail::Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

Tensor Tensor::from_floats(Shape shape, std::span<const float> data) {
  return from_data(std::move(shape), std::vector<Real>(data.begin(), data.end()));
}

Tensor Tensor::scalar(Real value) { return from_data({}, {value}); }

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::dim(std::size_t i) const {
  if (i >= node_->shape.size()) {
    throw ShapeError("axis " + std::to_string(i) + " out of range for shape " +
                     shape_str(node_->shape));
  }
  return node_->shape[i];
}

std::size_t Tensor::numel() const { return node_->data.size(); }

std::span<const Real> Tensor::data() const { return node_->data; }
std::span<Real> Tensor::mutable_data() { return node_->data; }

Real Tensor::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_str(shape()));
  return node_->data[0];
}

std::vector<float> Tensor::to_floats() const {
  return std::vector<float>(node_->data.begin(), node_->data.end());
}

bool Tensor::requires_grad() const { return node_ && node_->requires_grad; }
void Tensor::set_requires_grad(bool value) { node_->requires_grad = value; }
bool Tensor::has_grad() const { return !node_->grad.empty(); }
std::span<const Real> Tensor::grad() const { return node_->grad; }
std::span<Real> Tensor::mutable_grad() { return node_->grad_buffer(); }
void Tensor::zero_grad() { node_->grad.clear(); }

const char* Tensor::op_name() const { return node_->op; }

Tensor Tensor::detach() const { return from_data(shape(), node_->data); }

void Tensor::backward() const {
  if (numel() != 1) {
    throw ShapeError("backward() needs a single-element tensor, got " + shape_str(shape()));
  }
  if (!node_->requires_grad) throw std::logic_error("backward() on a tensor without history");

  // Iterative post-order DFS gives a topological order (inputs first).
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack{{node_.get(), 0}};
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      detail::Node* child = node->inputs[next++].get();
      if (child->requires_grad && visited.insert(child).second) stack.emplace_back(child, 0);
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad_buffer()[0] += Real{1};
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* node = *it;
    if (node->backward && !node->grad.empty()) node->backward(*node);
  }
}

namespace detail {

Tensor make_op(const char* op, Shape shape, std::vector<Real> data, std::vector<Tensor> inputs,
               BackwardFn backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->data = std::move(data);
  node->op = op;
  if (t_grad_enabled) {
    const bool any = std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.requires_grad(); });
    if (any) {
      node->requires_grad = true;
      node->inputs.reserve(inputs.size());
      for (auto& t : inputs) node->inputs.push_back(t.node());
      node->backward = std::move(backward);
    }
  }
  return Tensor(std::move(node));
}

}  // namespace detail
}  // namespace CHOREO_REAL_NS
}  // namespace choreo
