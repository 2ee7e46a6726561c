// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>

#include "autograd_internal.hpp"
#include "choreo/tensor/ops.hpp"
#include "real_kernels.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

using detail::Node;
using detail::wants_grad;

namespace {

std::vector<Real> transposed(const Real* src, std::size_t rows, std::size_t cols) {
  std::vector<Real> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  }
  return out;
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() < 2 || bs.size() < 2) {
    throw ShapeError("matmul needs rank >= 2 operands, got " + shape_str(as) + " and " +
                     shape_str(bs));
  }
  const std::size_t m = as[as.size() - 2];
  const std::size_t k = as.back();
  const std::size_t kb = bs[bs.size() - 2];
  const std::size_t n = bs.back();
  const bool shared_rhs = bs.size() == 2;
  bool ok = k == kb;
  if (!shared_rhs) ok = ok && as.size() == bs.size() && std::equal(as.begin(), as.end() - 2, bs.begin());
  if (!ok) {
    throw ShapeError("matmul dimension mismatch: " + shape_str(as) + " x " + shape_str(bs));
  }
  std::size_t batch = 1;
  for (std::size_t i = 0; i + 2 < as.size(); ++i) batch *= as[i];

  Shape out_shape(as.begin(), as.end() - 1);
  out_shape.push_back(n);
  std::vector<Real> out(batch * m * n, Real{0});
  const Real* ad = a.data().data();
  const Real* bd = b.data().data();
  if (shared_rhs) {
    rk::gemm_acc(batch * m, n, k, ad, k, 1, bd, out.data());
  } else {
    for (std::size_t s = 0; s < batch; ++s) {
      rk::gemm_acc(m, n, k, ad + s * m * k, k, 1, bd + s * k * n, out.data() + s * m * n);
    }
  }

  return detail::make_op(
      "matmul", std::move(out_shape), std::move(out), {a, b},
      [batch, m, n, k, shared_rhs](Node& self) {
        const Real* g = self.grad.data();
        Node& na = *self.inputs[0];
        Node& nb = *self.inputs[1];
        const std::size_t rows = shared_rhs ? batch * m : m;
        const std::size_t slices = shared_rhs ? 1 : batch;
        for (std::size_t s = 0; s < slices; ++s) {
          const Real* gs = g + s * rows * n;
          const Real* as_ = na.data.data() + s * rows * k;
          const Real* bs_ = nb.data.data() + s * k * n;
          if (wants_grad(self, 0)) {
            // dA = dC . B^T
            const auto bt = transposed(bs_, k, n);
            rk::gemm_acc(rows, k, n, gs, n, 1, bt.data(), na.grad_buffer().data() + s * rows * k);
          }
          if (wants_grad(self, 1)) {
            // dB = A^T . dC
            rk::gemm_acc(k, n, rows, as_, 1, k, gs, nb.grad_buffer().data() + s * k * n);
          }
        }
      });
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo
