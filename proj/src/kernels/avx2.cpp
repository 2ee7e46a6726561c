// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

// Compiled with -mavx2 (no -mfma): products and sums stay separately
// rounded, matching the scalar reference bit for bit.

#include "choreo/kernels/kernels.hpp"

#if defined(CHOREO_HAVE_AVX2)

#include <immintrin.h>

#include "kernels_internal.hpp"

namespace choreo::kernels {
namespace {

// Rows in flight per micro-tile; each keeps two 8-wide accumulators.
constexpr std::size_t kRowBlock = 4;

void gemm_acc(std::size_t m, std::size_t n, std::size_t k, const float* a, std::size_t a_row,
              std::size_t a_col, const float* b, float* c) {
  std::size_t i = 0;
  for (; i + kRowBlock <= m; i += kRowBlock) {
    const float* a0 = a + (i + 0) * a_row;
    const float* a1 = a + (i + 1) * a_row;
    const float* a2 = a + (i + 2) * a_row;
    const float* a3 = a + (i + 3) * a_row;
    float* c0 = c + (i + 0) * n;
    float* c1 = c + (i + 1) * n;
    float* c2 = c + (i + 2) * n;
    float* c3 = c + (i + 3) * n;
    std::size_t j = 0;
    for (; j + 16 <= n; j += 16) {
      __m256 acc00 = _mm256_loadu_ps(c0 + j), acc01 = _mm256_loadu_ps(c0 + j + 8);
      __m256 acc10 = _mm256_loadu_ps(c1 + j), acc11 = _mm256_loadu_ps(c1 + j + 8);
      __m256 acc20 = _mm256_loadu_ps(c2 + j), acc21 = _mm256_loadu_ps(c2 + j + 8);
      __m256 acc30 = _mm256_loadu_ps(c3 + j), acc31 = _mm256_loadu_ps(c3 + j + 8);
      for (std::size_t p = 0; p < k; ++p) {
        const float* b_row = b + p * n + j;
        const __m256 b0 = _mm256_loadu_ps(b_row);
        const __m256 b1 = _mm256_loadu_ps(b_row + 8);
        __m256 av = _mm256_set1_ps(a0[p * a_col]);
        acc00 = _mm256_add_ps(acc00, _mm256_mul_ps(av, b0));
        acc01 = _mm256_add_ps(acc01, _mm256_mul_ps(av, b1));
        av = _mm256_set1_ps(a1[p * a_col]);
        acc10 = _mm256_add_ps(acc10, _mm256_mul_ps(av, b0));
        acc11 = _mm256_add_ps(acc11, _mm256_mul_ps(av, b1));
        av = _mm256_set1_ps(a2[p * a_col]);
        acc20 = _mm256_add_ps(acc20, _mm256_mul_ps(av, b0));
        acc21 = _mm256_add_ps(acc21, _mm256_mul_ps(av, b1));
        av = _mm256_set1_ps(a3[p * a_col]);
        acc30 = _mm256_add_ps(acc30, _mm256_mul_ps(av, b0));
        acc31 = _mm256_add_ps(acc31, _mm256_mul_ps(av, b1));
      }
      _mm256_storeu_ps(c0 + j, acc00), _mm256_storeu_ps(c0 + j + 8, acc01);
      _mm256_storeu_ps(c1 + j, acc10), _mm256_storeu_ps(c1 + j + 8, acc11);
      _mm256_storeu_ps(c2 + j, acc20), _mm256_storeu_ps(c2 + j + 8, acc21);
      _mm256_storeu_ps(c3 + j, acc30), _mm256_storeu_ps(c3 + j + 8, acc31);
    }
    for (; j + 8 <= n; j += 8) {
      __m256 acc0 = _mm256_loadu_ps(c0 + j), acc1 = _mm256_loadu_ps(c1 + j);
      __m256 acc2 = _mm256_loadu_ps(c2 + j), acc3 = _mm256_loadu_ps(c3 + j);
      for (std::size_t p = 0; p < k; ++p) {
        const __m256 bv = _mm256_loadu_ps(b + p * n + j);
        acc0 = _mm256_add_ps(acc0, _mm256_mul_ps(_mm256_set1_ps(a0[p * a_col]), bv));
        acc1 = _mm256_add_ps(acc1, _mm256_mul_ps(_mm256_set1_ps(a1[p * a_col]), bv));
        acc2 = _mm256_add_ps(acc2, _mm256_mul_ps(_mm256_set1_ps(a2[p * a_col]), bv));
        acc3 = _mm256_add_ps(acc3, _mm256_mul_ps(_mm256_set1_ps(a3[p * a_col]), bv));
      }
      _mm256_storeu_ps(c0 + j, acc0), _mm256_storeu_ps(c1 + j, acc1);
      _mm256_storeu_ps(c2 + j, acc2), _mm256_storeu_ps(c3 + j, acc3);
    }
    for (; j < n; ++j) {
      float s0 = c0[j], s1 = c1[j], s2 = c2[j], s3 = c3[j];
      for (std::size_t p = 0; p < k; ++p) {
        const float bv = b[p * n + j];
        s0 = s0 + a0[p * a_col] * bv;
        s1 = s1 + a1[p * a_col] * bv;
        s2 = s2 + a2[p * a_col] * bv;
        s3 = s3 + a3[p * a_col] * bv;
      }
      c0[j] = s0, c1[j] = s1, c2[j] = s2, c3[j] = s3;
    }
  }
  for (; i < m; ++i) {
    const float* ai = a + i * a_row;
    float* ci = c + i * n;
    std::size_t j = 0;
    for (; j + 8 <= n; j += 8) {
      __m256 acc = _mm256_loadu_ps(ci + j);
      for (std::size_t p = 0; p < k; ++p) {
        acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_set1_ps(ai[p * a_col]),
                                               _mm256_loadu_ps(b + p * n + j)));
      }
      _mm256_storeu_ps(ci + j, acc);
    }
    for (; j < n; ++j) {
      float s = ci[j];
      for (std::size_t p = 0; p < k; ++p) s = s + ai[p * a_col] * b[p * n + j];
      ci[j] = s;
    }
  }
}

void add(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void mul(std::size_t n, const float* x, const float* y, float* out) {
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_mul_ps(_mm256_loadu_ps(x + i), _mm256_loadu_ps(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void axpy(std::size_t n, float alpha, const float* x, float* y) {
  const __m256 av = _mm256_set1_ps(alpha);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 prod = _mm256_mul_ps(av, _mm256_loadu_ps(x + i));
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(y + i), prod));
  }
  for (; i < n; ++i) y[i] = y[i] + alpha * x[i];
}

void adamw(std::size_t n, float* param, const float* grad, float* m, float* v,
           const AdamWStep& s) {
  const __m256 beta1 = _mm256_set1_ps(s.beta1);
  const __m256 beta2 = _mm256_set1_ps(s.beta2);
  const __m256 omb1 = _mm256_set1_ps(s.one_minus_beta1);
  const __m256 omb2 = _mm256_set1_ps(s.one_minus_beta2);
  const __m256 bc1 = _mm256_set1_ps(s.bias_correction1);
  const __m256 bc2 = _mm256_set1_ps(s.bias_correction2);
  const __m256 eps = _mm256_set1_ps(s.eps);
  const __m256 wd = _mm256_set1_ps(s.weight_decay);
  const __m256 lr = _mm256_set1_ps(s.lr);
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256 g = _mm256_loadu_ps(grad + i);
    const __m256 p = _mm256_loadu_ps(param + i);
    __m256 mv = _mm256_loadu_ps(m + i);
    __m256 vv = _mm256_loadu_ps(v + i);
    mv = _mm256_add_ps(_mm256_mul_ps(beta1, mv), _mm256_mul_ps(omb1, g));
    vv = _mm256_add_ps(_mm256_mul_ps(beta2, vv), _mm256_mul_ps(omb2, _mm256_mul_ps(g, g)));
    const __m256 m_hat = _mm256_div_ps(mv, bc1);
    const __m256 v_hat = _mm256_div_ps(vv, bc2);
    const __m256 update = _mm256_add_ps(
        _mm256_div_ps(m_hat, _mm256_add_ps(_mm256_sqrt_ps(v_hat), eps)), _mm256_mul_ps(wd, p));
    _mm256_storeu_ps(param + i, _mm256_sub_ps(p, _mm256_mul_ps(lr, update)));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
  }
  for (; i < n; ++i) adamw_lane(param[i], grad[i], m[i], v[i], s);
}

}  // namespace

const KernelTable* avx2_table() {
  static const KernelTable table{Isa::kAvx2, "avx2", gemm_acc, add, mul, axpy, adamw};
  static const bool supported = __builtin_cpu_supports("avx2");
  return supported ? &table : nullptr;
}

}  // namespace choreo::kernels

#else

namespace choreo::kernels {
const KernelTable* avx2_table() { return nullptr; }
}  // namespace choreo::kernels

#endif
