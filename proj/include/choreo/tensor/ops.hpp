// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "choreo/tensor/tensor.hpp"

// Differentiable primitives. Every op records a backward rule when grad
// mode is on and any input requires grad.
namespace choreo {
inline namespace CHOREO_REAL_NS {

// --- linear algebra -------------------------------------------------------

/// [..., m, k] x [k, n] -> [..., m, n]  (shared right operand), or
/// [B..., m, k] x [B..., k, n] -> [B..., m, n]  (batched, equal leading dims).
Tensor matmul(const Tensor& a, const Tensor& b);

// --- layout ---------------------------------------------------------------

Tensor reshape(const Tensor& x, Shape shape);
Tensor transpose(const Tensor& x, std::size_t dim0, std::size_t dim1);
/// Sub-range [start, start + length) along `dim`.
Tensor narrow(const Tensor& x, std::size_t dim, std::size_t start, std::size_t length);
Tensor concat(const std::vector<Tensor>& parts, std::size_t dim);
Tensor detach(const Tensor& x);

// --- elementwise (numpy-style broadcasting) ---------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, Real factor);
Tensor add_scalar(const Tensor& x, Real value);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, Real slope = Real(0.2));
/// tanh approximation
Tensor gelu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor tanh(const Tensor& x);
Tensor exp(const Tensor& x);
Tensor log(const Tensor& x);
Tensor abs(const Tensor& x);
Tensor square(const Tensor& x);
/// log(1 + e^x), evaluated without overflow.
Tensor softplus(const Tensor& x);

// --- reductions -----------------------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);
/// Mean over one axis; the axis is removed.
Tensor mean_dim(const Tensor& x, std::size_t dim);

// --- normalisation / classification ---------------------------------------

Tensor softmax_lastdim(const Tensor& x);
Tensor log_softmax_lastdim(const Tensor& x);
/// Mean negative log-likelihood of `targets` under softmax(logits) over the
/// last axis. Rows whose target equals `ignore_index` are excluded.
/// Throws IndexError for out-of-range targets and std::invalid_argument
/// when no row is supervised.
Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, int ignore_index = -1);
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps = Real(1e-5));

// --- lookup / convolution -------------------------------------------------

/// Rows of `table` [V, D] -> [indices.size(), D].
Tensor embedding(const Tensor& table, std::span<const int> indices);

struct Conv1dSpec {
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t padding = 1;
  std::size_t dilation = 1;
};

std::size_t conv1d_out_length(std::size_t length, const Conv1dSpec& spec);
std::size_t conv_transpose1d_out_length(std::size_t length, const Conv1dSpec& spec);

/// x [B, L, Cin], weight [K*Cin, Cout], bias [Cout] or undefined -> [B, Lout, Cout].
/// Weight row (k*Cin + c) multiplies input channel c at tap k.
Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv1dSpec& spec);
/// Adjoint of conv1d: x [B, L, Cin], weight [Cin, K*Cout] -> [B, Lout, Cout],
/// Lout = (L - 1)*stride - 2*padding + dilation*(K - 1) + 1.
Tensor conv_transpose1d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        const Conv1dSpec& spec);

}  // namespace CHOREO_REAL_NS
}  // namespace choreo
