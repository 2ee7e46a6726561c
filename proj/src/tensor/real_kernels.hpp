// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>

#include "choreo/kernels/kernels.hpp"
#include "choreo/tensor/real.hpp"

// Routes Real-typed inner loops to the runtime-selected SIMD table in the
// float build; the double build uses the same loop order in plain C++.
namespace choreo {
inline namespace CHOREO_REAL_NS {
namespace rk {

inline void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const Real* a, std::size_t a_row,
                     std::size_t a_col, const Real* b, Real* c) {
#if !defined(CHOREO_REAL_DOUBLE)
  kernels::active().gemm_acc(m, n, k, a, a_row, a_col, b, c);
#else
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const Real av = a[i * a_row + p * a_col];
      for (std::size_t j = 0; j < n; ++j) c[i * n + j] = c[i * n + j] + av * b[p * n + j];
    }
  }
#endif
}

inline void add(std::size_t n, const Real* x, const Real* y, Real* out) {
#if !defined(CHOREO_REAL_DOUBLE)
  kernels::active().add(n, x, y, out);
#else
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + y[i];
#endif
}

inline void mul(std::size_t n, const Real* x, const Real* y, Real* out) {
#if !defined(CHOREO_REAL_DOUBLE)
  kernels::active().mul(n, x, y, out);
#else
  for (std::size_t i = 0; i < n; ++i) out[i] = x[i] * y[i];
#endif
}

inline void axpy(std::size_t n, Real alpha, const Real* x, Real* y) {
#if !defined(CHOREO_REAL_DOUBLE)
  kernels::active().axpy(n, alpha, x, y);
#else
  for (std::size_t i = 0; i < n; ++i) y[i] = y[i] + alpha * x[i];
#endif
}

}  // namespace rk
}  // namespace CHOREO_REAL_NS
}  // namespace choreo
