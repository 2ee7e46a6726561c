// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <limits>

#include "autograd_internal.hpp"
#include "choreo/tensor/ops.hpp"
#include "real_kernels.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

using detail::Node;
using detail::wants_grad;

namespace {

std::size_t last_dim(const Tensor& x, const char* op) {
  if (x.ndim() == 0 || x.shape().back() == 0) {
    throw ShapeError(std::string(op) + " needs a non-empty last axis, got " + shape_str(x.shape()));
  }
  return x.shape().back();
}

}  // namespace

Tensor softmax_lastdim(const Tensor& x) {
  const std::size_t n = last_dim(x, "softmax");
  const std::size_t rows = x.numel() / n;
  const Real* src = x.data().data();
  std::vector<Real> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = src + r * n;
    Real* y = out.data() + r * n;
    const Real mx = *std::max_element(in, in + n);
    Real total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = std::exp(in[j] - mx);
      total += y[j];
    }
    for (std::size_t j = 0; j < n; ++j) y[j] /= total;
  }
  return detail::make_op("softmax", x.shape(), std::move(out), {x}, [rows, n](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* y = self.data.data() + r * n;
      const Real* dy = self.grad.data() + r * n;
      Real dot = 0;
      for (std::size_t j = 0; j < n; ++j) dot += dy[j] * y[j];
      for (std::size_t j = 0; j < n; ++j) g[r * n + j] += y[j] * (dy[j] - dot);
    }
  });
}

Tensor log_softmax_lastdim(const Tensor& x) {
  const std::size_t n = last_dim(x, "log_softmax");
  const std::size_t rows = x.numel() / n;
  const Real* src = x.data().data();
  std::vector<Real> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = src + r * n;
    const Real mx = *std::max_element(in, in + n);
    Real total = 0;
    for (std::size_t j = 0; j < n; ++j) total += std::exp(in[j] - mx);
    const Real lse = mx + std::log(total);
    for (std::size_t j = 0; j < n; ++j) out[r * n + j] = in[j] - lse;
  }
  return detail::make_op("log_softmax", x.shape(), std::move(out), {x}, [rows, n](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const Real* ly = self.data.data() + r * n;
      const Real* dy = self.grad.data() + r * n;
      Real total = 0;
      for (std::size_t j = 0; j < n; ++j) total += dy[j];
      for (std::size_t j = 0; j < n; ++j) g[r * n + j] += dy[j] - std::exp(ly[j]) * total;
    }
  });
}

Tensor cross_entropy(const Tensor& logits, std::span<const int> targets, int ignore_index) {
  const std::size_t n = last_dim(logits, "cross_entropy");
  const std::size_t rows = logits.numel() / n;
  if (targets.size() != rows) {
    throw ShapeError("cross_entropy: " + std::to_string(targets.size()) + " targets for logits " +
                     shape_str(logits.shape()));
  }
  std::vector<int> tg(targets.begin(), targets.end());
  std::size_t count = 0;
  for (int t : tg) {
    if (t == ignore_index) continue;
    if (t < 0 || static_cast<std::size_t>(t) >= n) {
      throw IndexError("cross_entropy: class index " + std::to_string(t) + " outside [0, " +
                       std::to_string(n) + ")");
    }
    ++count;
  }
  if (count == 0) throw std::invalid_argument("cross_entropy: no supervised positions");

  const Real* src = logits.data().data();
  auto probs = std::make_shared<std::vector<Real>>(logits.numel(), Real{0});
  Real loss = 0;
  for (std::size_t r = 0; r < rows; ++r) {
    if (tg[r] == ignore_index) continue;
    const Real* in = src + r * n;
    const Real mx = *std::max_element(in, in + n);
    Real total = 0;
    for (std::size_t j = 0; j < n; ++j) {
      (*probs)[r * n + j] = std::exp(in[j] - mx);
      total += (*probs)[r * n + j];
    }
    for (std::size_t j = 0; j < n; ++j) (*probs)[r * n + j] /= total;
    loss += (mx + std::log(total)) - in[tg[r]];
  }
  const Real denom = static_cast<Real>(count);
  return detail::make_op(
      "cross_entropy", {}, {loss / denom}, {logits},
      [probs, tg = std::move(tg), ignore_index, n, rows, denom](Node& self) {
        auto& g = self.inputs[0]->grad_buffer();
        const Real s = self.grad[0] / denom;
        for (std::size_t r = 0; r < rows; ++r) {
          if (tg[r] == ignore_index) continue;
          for (std::size_t j = 0; j < n; ++j) g[r * n + j] += s * (*probs)[r * n + j];
          g[r * n + static_cast<std::size_t>(tg[r])] -= s;
        }
      });
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, Real eps) {
  const std::size_t n = last_dim(x, "layer_norm");
  if (gain.numel() != n || bias.numel() != n) {
    throw ShapeError("layer_norm: gain/bias " + shape_str(gain.shape()) + "/" +
                     shape_str(bias.shape()) + " do not match last axis of " +
                     shape_str(x.shape()));
  }
  const std::size_t rows = x.numel() / n;
  const Real* src = x.data().data();
  const Real* gd = gain.data().data();
  const Real* bd = bias.data().data();
  auto xhat = std::make_shared<std::vector<Real>>(x.numel());
  auto rstd = std::make_shared<std::vector<Real>>(rows);
  std::vector<Real> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* in = src + r * n;
    Real m = 0;
    for (std::size_t j = 0; j < n; ++j) m += in[j];
    m /= static_cast<Real>(n);
    Real var = 0;
    for (std::size_t j = 0; j < n; ++j) var += (in[j] - m) * (in[j] - m);
    var /= static_cast<Real>(n);
    const Real rs = Real{1} / std::sqrt(var + eps);
    (*rstd)[r] = rs;
    for (std::size_t j = 0; j < n; ++j) {
      const Real h = (in[j] - m) * rs;
      (*xhat)[r * n + j] = h;
      out[r * n + j] = h * gd[j] + bd[j];
    }
  }
  return detail::make_op(
      "layer_norm", x.shape(), std::move(out), {x, gain, bias},
      [xhat, rstd, rows, n](Node& self) {
        const Real* gd = self.inputs[1]->data.data();
        const Real inv_n = Real{1} / static_cast<Real>(n);
        if (wants_grad(self, 0)) {
          auto& gx = self.inputs[0]->grad_buffer();
          std::vector<Real> dh(n);
          for (std::size_t r = 0; r < rows; ++r) {
            const Real* dy = self.grad.data() + r * n;
            const Real* h = xhat->data() + r * n;
            Real sum_dh = 0, sum_dh_h = 0;
            for (std::size_t j = 0; j < n; ++j) {
              dh[j] = dy[j] * gd[j];
              sum_dh += dh[j];
              sum_dh_h += dh[j] * h[j];
            }
            for (std::size_t j = 0; j < n; ++j) {
              gx[r * n + j] += (*rstd)[r] * (dh[j] - sum_dh * inv_n - h[j] * sum_dh_h * inv_n);
            }
          }
        }
        if (wants_grad(self, 1)) {
          auto& gg = self.inputs[1]->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < n; ++j) gg[j] += self.grad[r * n + j] * (*xhat)[r * n + j];
          }
        }
        if (wants_grad(self, 2)) {
          auto& gb = self.inputs[2]->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) rk::add(n, gb.data(), self.grad.data() + r * n, gb.data());
        }
      });
}

Tensor embedding(const Tensor& table, std::span<const int> indices) {
  if (table.ndim() != 2) throw ShapeError("embedding table must be 2-D, got " + shape_str(table.shape()));
  const std::size_t vocab = table.dim(0);
  const std::size_t d = table.dim(1);
  std::vector<int> idx(indices.begin(), indices.end());
  std::vector<Real> out(idx.size() * d);
  const Real* src = table.data().data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= vocab) {
      throw IndexError("embedding index " + std::to_string(idx[i]) + " outside [0, " +
                       std::to_string(vocab) + ")");
    }
    std::copy_n(src + static_cast<std::size_t>(idx[i]) * d, d, out.data() + i * d);
  }
  const std::size_t count = idx.size();
  return detail::make_op("embedding", {count, d}, std::move(out), {table},
                         [idx = std::move(idx), d](Node& self) {
                           auto& g = self.inputs[0]->grad_buffer();
                           for (std::size_t i = 0; i < idx.size(); ++i) {
                             Real* dst = g.data() + static_cast<std::size_t>(idx[i]) * d;
                             rk::add(d, dst, self.grad.data() + i * d, dst);
                           }
                         });
}

// --- convolution ------------------------------------------------------------

std::size_t conv1d_out_length(std::size_t length, const Conv1dSpec& spec) {
  const std::size_t span = spec.dilation * (spec.kernel - 1) + 1;
  if (length + 2 * spec.padding < span) return 0;
  return (length + 2 * spec.padding - span) / spec.stride + 1;
}

std::size_t conv_transpose1d_out_length(std::size_t length, const Conv1dSpec& spec) {
  if (length == 0) return 0;
  const std::size_t full = (length - 1) * spec.stride + spec.dilation * (spec.kernel - 1) + 1;
  return full > 2 * spec.padding ? full - 2 * spec.padding : 0;
}

namespace {

// cols[(b, t), k*C + c] = x[b, t*stride - pad + k*dil, c]  (0 outside)
void im2col(const Real* x, std::size_t batch, std::size_t len, std::size_t ch, std::size_t out_len,
            const Conv1dSpec& s, Real* cols) {
  const std::size_t width = s.kernel * ch;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      Real* row = cols + (b * out_len + t) * width;
      for (std::size_t k = 0; k < s.kernel; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * s.stride + k * s.dilation) -
                                   static_cast<std::ptrdiff_t>(s.padding);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) {
          std::fill_n(row + k * ch, ch, Real{0});
        } else {
          std::copy_n(x + (b * len + static_cast<std::size_t>(pos)) * ch, ch, row + k * ch);
        }
      }
    }
  }
}

// Adjoint of im2col: x[b, pos, c] += cols[(b, t), k*C + c]
void col2im(const Real* cols, std::size_t batch, std::size_t len, std::size_t ch,
            std::size_t out_len, const Conv1dSpec& s, Real* x) {
  const std::size_t width = s.kernel * ch;
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_len; ++t) {
      const Real* row = cols + (b * out_len + t) * width;
      for (std::size_t k = 0; k < s.kernel; ++k) {
        const std::ptrdiff_t pos = static_cast<std::ptrdiff_t>(t * s.stride + k * s.dilation) -
                                   static_cast<std::ptrdiff_t>(s.padding);
        if (pos < 0 || pos >= static_cast<std::ptrdiff_t>(len)) continue;
        Real* dst = x + (b * len + static_cast<std::size_t>(pos)) * ch;
        rk::add(ch, dst, row + k * ch, dst);
      }
    }
  }
}

std::vector<Real> transposed(const Real* src, std::size_t rows, std::size_t cols) {
  std::vector<Real> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[c * rows + r] = src[r * cols + c];
  }
  return out;
}

void check_conv_input(const Tensor& x, const char* op) {
  if (x.ndim() != 3) {
    throw ShapeError(std::string(op) + " expects [batch, length, channels], got " +
                     shape_str(x.shape()));
  }
}

}  // namespace

Tensor conv1d(const Tensor& x, const Tensor& weight, const Tensor& bias, const Conv1dSpec& spec) {
  check_conv_input(x, "conv1d");
  const std::size_t batch = x.dim(0), len = x.dim(1), cin = x.dim(2);
  if (weight.ndim() != 2 || weight.dim(0) != spec.kernel * cin) {
    throw ShapeError("conv1d weight " + shape_str(weight.shape()) + " does not match kernel " +
                     std::to_string(spec.kernel) + " x input " + shape_str(x.shape()));
  }
  const std::size_t cout = weight.dim(1);
  if (bias.defined() && bias.numel() != cout) {
    throw ShapeError("conv1d bias " + shape_str(bias.shape()) + " vs " + std::to_string(cout) +
                     " output channels");
  }
  const std::size_t out_len = conv1d_out_length(len, spec);
  if (out_len == 0) throw ShapeError("conv1d input " + shape_str(x.shape()) + " too short");
  const std::size_t width = spec.kernel * cin;
  const std::size_t rows = batch * out_len;

  auto cols = std::make_shared<std::vector<Real>>(rows * width);
  im2col(x.data().data(), batch, len, cin, out_len, spec, cols->data());
  std::vector<Real> out(rows * cout, Real{0});
  if (bias.defined()) {
    for (std::size_t r = 0; r < rows; ++r) std::copy_n(bias.data().data(), cout, out.data() + r * cout);
  }
  rk::gemm_acc(rows, cout, width, cols->data(), width, 1, weight.data().data(), out.data());

  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return detail::make_op(
      "conv1d", {batch, out_len, cout}, std::move(out), std::move(inputs),
      [cols, spec, batch, len, cin, cout, out_len, rows, width](Node& self) {
        const Real* g = self.grad.data();
        if (wants_grad(self, 0)) {
          const auto wt = transposed(self.inputs[1]->data.data(), width, cout);
          std::vector<Real> dcols(rows * width, Real{0});
          rk::gemm_acc(rows, width, cout, g, cout, 1, wt.data(), dcols.data());
          col2im(dcols.data(), batch, len, cin, out_len, spec,
                 self.inputs[0]->grad_buffer().data());
        }
        if (wants_grad(self, 1)) {
          rk::gemm_acc(width, cout, rows, cols->data(), 1, width, g,
                       self.inputs[1]->grad_buffer().data());
        }
        if (self.inputs.size() > 2 && wants_grad(self, 2)) {
          auto& gb = self.inputs[2]->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) rk::add(cout, gb.data(), g + r * cout, gb.data());
        }
      });
}

Tensor conv_transpose1d(const Tensor& x, const Tensor& weight, const Tensor& bias,
                        const Conv1dSpec& spec) {
  check_conv_input(x, "conv_transpose1d");
  const std::size_t batch = x.dim(0), len = x.dim(1), cin = x.dim(2);
  if (weight.ndim() != 2 || weight.dim(0) != cin || weight.dim(1) % spec.kernel != 0) {
    throw ShapeError("conv_transpose1d weight " + shape_str(weight.shape()) +
                     " does not match input " + shape_str(x.shape()) + " with kernel " +
                     std::to_string(spec.kernel));
  }
  const std::size_t cout = weight.dim(1) / spec.kernel;
  if (bias.defined() && bias.numel() != cout) {
    throw ShapeError("conv_transpose1d bias " + shape_str(bias.shape()) + " vs " +
                     std::to_string(cout) + " output channels");
  }
  const std::size_t out_len = conv_transpose1d_out_length(len, spec);
  if (out_len == 0) throw ShapeError("conv_transpose1d output would be empty");
  // Output frames play the role of conv1d's input: conv1d(y) maps out_len -> len.
  if (conv1d_out_length(out_len, spec) != len) {
    throw ShapeError("conv_transpose1d: kernel/stride/padding do not tile the output exactly");
  }
  const std::size_t width = spec.kernel * cout;
  const std::size_t rows = batch * len;

  std::vector<Real> cols(rows * width, Real{0});
  rk::gemm_acc(rows, width, cin, x.data().data(), cin, 1, weight.data().data(), cols.data());
  std::vector<Real> out(batch * out_len * cout, Real{0});
  col2im(cols.data(), batch, out_len, cout, len, spec, out.data());
  if (bias.defined()) {
    const Real* bd = bias.data().data();
    for (std::size_t r = 0; r < batch * out_len; ++r) rk::add(cout, out.data() + r * cout, bd, out.data() + r * cout);
  }

  std::vector<Tensor> inputs{x, weight};
  if (bias.defined()) inputs.push_back(bias);
  return detail::make_op(
      "conv_transpose1d", {batch, out_len, cout}, std::move(out), std::move(inputs),
      [spec, batch, len, cin, cout, out_len, rows, width](Node& self) {
        const Real* g = self.grad.data();
        std::vector<Real> dcols(rows * width);
        im2col(g, batch, out_len, cout, len, spec, dcols.data());
        if (wants_grad(self, 0)) {
          const auto wt = transposed(self.inputs[1]->data.data(), cin, width);
          rk::gemm_acc(rows, cin, width, dcols.data(), width, 1, wt.data(),
                       self.inputs[0]->grad_buffer().data());
        }
        if (wants_grad(self, 1)) {
          rk::gemm_acc(cin, width, rows, self.inputs[0]->data.data(), 1, cin, dcols.data(),
                       self.inputs[1]->grad_buffer().data());
        }
        if (self.inputs.size() > 2 && wants_grad(self, 2)) {
          auto& gb = self.inputs[2]->grad_buffer();
          for (std::size_t r = 0; r < batch * out_len; ++r) rk::add(cout, gb.data(), g + r * cout, gb.data());
        }
      });
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo
