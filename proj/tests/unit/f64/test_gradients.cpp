// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <vector>

#include "choreo/tensor/gradcheck.hpp"
#include "choreo/tensor/ops.hpp"
#include "choreo/util/rng.hpp"
#include "doctest.h"

using namespace choreo;

namespace {

Tensor rand_tensor(Shape shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<Real> v(shape_numel(shape));
  for (auto& x : v) x = rng.uniform(lo, hi);
  return Tensor::from_data(std::move(shape), std::move(v));
}

// Weighted sum so every output element gets a distinct upstream gradient.
Tensor probe(const Tensor& y, std::uint64_t seed) {
  Rng rng(seed);
  Tensor w = rand_tensor(y.shape(), rng);
  return sum(mul(y, w));
}

constexpr double kTol = 1e-4;

void check_unary(const char* name, Tensor (*op)(const Tensor&), double lo, double hi) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Tensor x = rand_tensor({3, 5}, rng, lo, hi);
    auto r = grad_check([&](const std::vector<Tensor>& in) { return probe(op(in[0]), seed + 99); },
                        {x}, 1e-6);
    CAPTURE(name);
    CAPTURE(seed);
    CHECK(r.max_relative_error < kTol);
  }
}

}  // namespace

TEST_CASE("constant closure has exactly zero analytic gradient") {
  Rng rng(1);
  Tensor x = rand_tensor({4}, rng);
  auto r = grad_check([](const std::vector<Tensor>&) { return Tensor::scalar(3.0); }, {x});
  CHECK(r.max_relative_error == 0.0);
  CHECK(r.analytic == 0.0);
}

TEST_CASE("matmul gradients match central differences") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Tensor a = rand_tensor({3, 4}, rng), b = rand_tensor({4, 5}, rng);
    auto r = grad_check(
        [](const std::vector<Tensor>& in) { return sum(matmul(in[0], in[1])); }, {a, b});
    CHECK(r.max_relative_error < kTol);
    Tensor ba = rand_tensor({2, 3, 4}, rng), bb = rand_tensor({2, 4, 2}, rng);
    r = grad_check([&](const std::vector<Tensor>& in) { return probe(matmul(in[0], in[1]), seed); },
                   {ba, bb});
    CHECK(r.max_relative_error < kTol);
  }
}

TEST_CASE("elementwise primitives") {
  check_unary("relu", [](const Tensor& x) { return relu(x); }, 0.1, 1.0);
  check_unary("leaky_relu", [](const Tensor& x) { return leaky_relu(x); }, -1.0, -0.1);
  check_unary("gelu", [](const Tensor& x) { return gelu(x); }, -2.0, 2.0);
  check_unary("sigmoid", [](const Tensor& x) { return sigmoid(x); }, -3.0, 3.0);
  check_unary("tanh", [](const Tensor& x) { return choreo::tanh(x); }, -2.0, 2.0);
  check_unary("exp", [](const Tensor& x) { return choreo::exp(x); }, -1.0, 1.0);
  check_unary("log", [](const Tensor& x) { return choreo::log(x); }, 0.5, 2.0);
  check_unary("abs", [](const Tensor& x) { return choreo::abs(x); }, 0.1, 1.0);
  check_unary("square", [](const Tensor& x) { return square(x); }, -1.0, 1.0);
  check_unary("softplus", [](const Tensor& x) { return softplus(x); }, -3.0, 3.0);
  check_unary("softmax", [](const Tensor& x) { return softmax_lastdim(x); }, -2.0, 2.0);
  check_unary("log_softmax", [](const Tensor& x) { return log_softmax_lastdim(x); }, -2.0, 2.0);
  check_unary("mean_dim", [](const Tensor& x) { return mean_dim(x, 0); }, -1.0, 1.0);
  check_unary("transpose", [](const Tensor& x) { return transpose(x, 0, 1); }, -1.0, 1.0);
  check_unary("narrow", [](const Tensor& x) { return narrow(x, 1, 1, 3); }, -1.0, 1.0);
  check_unary("reshape", [](const Tensor& x) { return reshape(x, {5, 3}); }, -1.0, 1.0);
  check_unary("scale", [](const Tensor& x) { return add_scalar(scale(x, 1.7), 0.3); }, -1.0, 1.0);
  check_unary("mean", [](const Tensor& x) { return mean(x); }, -1.0, 1.0);
}

TEST_CASE("broadcasting add, sub and mul") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Tensor a = rand_tensor({2, 3, 4}, rng);
    Tensor b = rand_tensor({4}, rng);
    Tensor c = rand_tensor({2, 1, 4}, rng);
    auto r = grad_check(
        [&](const std::vector<Tensor>& in) {
          return probe(mul(sub(add(in[0], in[1]), in[2]), add(in[2], in[1])), seed);
        },
        {a, b, c});
    CHECK(r.max_relative_error < kTol);
  }
}

TEST_CASE("concat") {
  Rng rng(3);
  Tensor a = rand_tensor({2, 3}, rng), b = rand_tensor({2, 2}, rng);
  auto r = grad_check(
      [](const std::vector<Tensor>& in) { return probe(concat({in[0], in[1]}, 1), 5); }, {a, b});
  CHECK(r.max_relative_error < kTol);
}

TEST_CASE("layer_norm, embedding and cross_entropy") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Tensor x = rand_tensor({3, 6}, rng), g = rand_tensor({6}, rng), b = rand_tensor({6}, rng);
    auto r = grad_check(
        [&](const std::vector<Tensor>& in) { return probe(layer_norm(in[0], in[1], in[2]), seed); },
        {x, g, b}, 1e-5);
    CHECK(r.max_relative_error < kTol);

    Tensor table = rand_tensor({5, 4}, rng);
    const std::vector<int> idx{1, 3, 1, 0};
    r = grad_check(
        [&](const std::vector<Tensor>& in) { return probe(embedding(in[0], idx), seed); }, {table});
    CHECK(r.max_relative_error < kTol);

    Tensor logits = rand_tensor({4, 7}, rng, -2.0, 2.0);
    const std::vector<int> targets{0, 6, -1, 3};
    r = grad_check(
        [&](const std::vector<Tensor>& in) { return cross_entropy(in[0], targets); }, {logits},
        1e-5);
    CHECK(r.max_relative_error < kTol);
  }
}

TEST_CASE("matmul, softmax and cross_entropy chain on 4x4 inputs") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Tensor a = rand_tensor({4, 4}, rng), b = rand_tensor({4, 4}, rng);
    const std::vector<int> targets{2, 0, 3, 1};
    auto r = grad_check(
        [&](const std::vector<Tensor>& in) {
          return cross_entropy(softmax_lastdim(matmul(in[0], in[1])), targets);
        },
        {a, b}, 1e-5);
    CHECK(r.max_relative_error < kTol);
  }
}

TEST_CASE("conv1d and conv_transpose1d") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(seed);
    Conv1dSpec spec{3, 1, 1, 1};
    Tensor x = rand_tensor({1, 8, 1}, rng), w = rand_tensor({3, 2}, rng), b = rand_tensor({2}, rng);
    auto r = grad_check(
        [&](const std::vector<Tensor>& in) {
          return probe(tanh(conv1d(in[0], in[1], in[2], spec)), seed);
        },
        {x, w, b}, 1e-5);
    CHECK(r.max_relative_error < kTol);

    Conv1dSpec down{4, 2, 1, 1};
    Tensor x2 = rand_tensor({2, 8, 3}, rng), w2 = rand_tensor({12, 2}, rng);
    r = grad_check(
        [&](const std::vector<Tensor>& in) { return probe(conv1d(in[0], in[1], Tensor(), down), seed); },
        {x2, w2});
    CHECK(r.max_relative_error < kTol);

    Conv1dSpec dil{3, 1, 2, 2};
    r = grad_check(
        [&](const std::vector<Tensor>& in) {
          return probe(conv1d(in[0], in[1], Tensor(), dil), seed);
        },
        {rand_tensor({1, 6, 2}, rng), rand_tensor({6, 2}, rng)});
    CHECK(r.max_relative_error < kTol);

    Tensor x3 = rand_tensor({2, 4, 3}, rng), w3 = rand_tensor({3, 8}, rng), b3 = rand_tensor({2}, rng);
    r = grad_check(
        [&](const std::vector<Tensor>& in) {
          return probe(conv_transpose1d(in[0], in[1], in[2], down), seed);
        },
        {x3, w3, b3});
    CHECK(r.max_relative_error < kTol);
  }
}
