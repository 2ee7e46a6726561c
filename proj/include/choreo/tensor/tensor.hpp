// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "choreo/tensor/real.hpp"

namespace choreo {

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class IndexError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

inline std::string shape_str(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

inline namespace CHOREO_REAL_NS {

namespace detail {

struct Node {
  Shape shape;
  std::vector<Real> data;
  std::vector<Real> grad;  // empty until first accumulation
  bool requires_grad = false;
  const char* op = "leaf";
  std::vector<std::shared_ptr<Node>> inputs;
  // Reads this node's grad and accumulates into the inputs' grads.
  std::function<void(Node&)> backward;

  std::vector<Real>& grad_buffer() {
    if (grad.empty()) grad.assign(data.size(), Real{0});
    return grad;
  }
};

}  // namespace detail

/// Dense row-major tensor handle with reverse-mode autodiff.
///
/// Copies share storage. Values are not mutated after creation except by
/// parameter initialisation and optimiser steps (mutable_data()).
class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, Real value, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<Real> data, bool requires_grad = false);
  static Tensor from_floats(Shape shape, std::span<const float> data);
  static Tensor scalar(Real value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t dim(std::size_t i) const;
  std::size_t numel() const;

  std::span<const Real> data() const;
  std::span<Real> mutable_data();
  Real item() const;
  Real at(std::size_t flat_index) const { return data()[flat_index]; }
  std::vector<float> to_floats() const;

  bool requires_grad() const;
  void set_requires_grad(bool value);
  bool has_grad() const;
  /// Empty span when no gradient has been accumulated.
  std::span<const Real> grad() const;
  std::span<Real> mutable_grad();
  void zero_grad();

  /// Backpropagates from a single-element tensor. Each node on the graph is
  /// visited exactly once, in reverse topological order.
  void backward() const;

  /// Same values, no history.
  Tensor detach() const;

  const char* op_name() const;
  /// Storage identity; two handles to one parameter compare equal.
  const void* id() const { return node_.get(); }

  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

bool grad_enabled();

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

}  // namespace CHOREO_REAL_NS
}  // namespace choreo
