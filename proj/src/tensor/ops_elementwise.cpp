// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstdint>

#include "autograd_internal.hpp"
#include "choreo/tensor/ops.hpp"
#include "real_kernels.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

using detail::Node;
using detail::wants_grad;

namespace {

enum class Layout { kSame, kSuffix, kGeneral };

// How each operand maps onto the broadcast result.
struct Broadcast {
  Shape out;
  Layout a_layout = Layout::kSame;
  Layout b_layout = Layout::kSame;
  std::vector<std::uint32_t> a_off;  // only for kGeneral
  std::vector<std::uint32_t> b_off;
};

Shape broadcast_shape(const Shape& a, const Shape& b, const char* op) {
  const std::size_t nd = std::max(a.size(), b.size());
  Shape out(nd, 1);
  for (std::size_t i = 0; i < nd; ++i) {
    const std::size_t da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
    const std::size_t db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ShapeError(std::string(op) + ": cannot broadcast " + shape_str(a) + " with " +
                       shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

// Operand whose (leading-1-stripped) shape is a trailing block of `out`.
bool is_suffix(const Shape& s, const Shape& out) {
  std::size_t lead = 0;
  while (lead < s.size() && s[lead] == 1) ++lead;
  const std::size_t len = s.size() - lead;
  if (len > out.size()) return false;
  for (std::size_t i = 0; i < len; ++i) {
    if (s[lead + i] != out[out.size() - len + i]) return false;
  }
  return true;
}

std::vector<std::uint32_t> offsets(const Shape& s, const Shape& out) {
  const std::size_t nd = out.size();
  std::vector<std::size_t> strides(nd, 0);
  std::size_t stride = 1;
  for (std::size_t i = nd; i-- > 0;) {
    const std::size_t src = i + s.size() >= nd ? i + s.size() - nd : SIZE_MAX;
    if (src != SIZE_MAX && s[src] != 1) {
      strides[i] = stride;
      stride *= s[src];
    }
  }
  const std::size_t n = shape_numel(out);
  std::vector<std::uint32_t> off(n);
  std::vector<std::size_t> idx(nd, 0);
  std::size_t cur = 0;
  for (std::size_t j = 0; j < n; ++j) {
    off[j] = static_cast<std::uint32_t>(cur);
    for (std::size_t ax = nd; ax-- > 0;) {
      if (++idx[ax] < out[ax]) {
        cur += strides[ax];
        break;
      }
      cur -= strides[ax] * (idx[ax] - 1);
      idx[ax] = 0;
    }
  }
  return off;
}

Broadcast plan(const Shape& a, const Shape& b, const char* op) {
  Broadcast bc;
  bc.out = broadcast_shape(a, b, op);
  auto classify = [&](const Shape& s, Layout& layout, std::vector<std::uint32_t>& off) {
    if (shape_numel(s) == shape_numel(bc.out)) {
      layout = Layout::kSame;
    } else if (is_suffix(s, bc.out)) {
      layout = Layout::kSuffix;
    } else {
      layout = Layout::kGeneral;
      off = offsets(s, bc.out);
    }
  };
  classify(a, bc.a_layout, bc.a_off);
  classify(b, bc.b_layout, bc.b_off);
  return bc;
}

// Materialises an operand at the broadcast shape.
std::vector<Real> expand(const Tensor& t, Layout layout, const std::vector<std::uint32_t>& off,
                         std::size_t n) {
  const auto src = t.data();
  std::vector<Real> out(n);
  switch (layout) {
    case Layout::kSame:
      std::copy(src.begin(), src.end(), out.begin());
      break;
    case Layout::kSuffix:
      for (std::size_t i = 0; i < n; i += src.size()) std::copy(src.begin(), src.end(), out.begin() + i);
      break;
    case Layout::kGeneral:
      for (std::size_t i = 0; i < n; ++i) out[i] = src[off[i]];
      break;
  }
  return out;
}

// grad_in += reduce(contrib) according to the operand's layout.
void reduce_into(std::vector<Real>& grad_in, const Real* contrib, std::size_t n, Layout layout,
                 const std::vector<std::uint32_t>& off) {
  switch (layout) {
    case Layout::kSame:
      rk::add(n, grad_in.data(), contrib, grad_in.data());
      break;
    case Layout::kSuffix: {
      const std::size_t w = grad_in.size();
      for (std::size_t i = 0; i < n; i += w) rk::add(w, grad_in.data(), contrib + i, grad_in.data());
      break;
    }
    case Layout::kGeneral:
      for (std::size_t i = 0; i < n; ++i) grad_in[off[i]] += contrib[i];
      break;
  }
}

template <typename Fwd, typename Dfn>
Tensor unary(const char* name, const Tensor& x, Fwd fwd, Dfn dfn) {
  const auto src = x.data();
  std::vector<Real> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = fwd(src[i]);
  return detail::make_op(name, x.shape(), std::move(out), {x}, [dfn](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const auto& xin = self.inputs[0]->data;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * dfn(xin[i], self.data[i]);
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  auto bc = std::make_shared<Broadcast>(plan(a.shape(), b.shape(), "add"));
  const std::size_t n = shape_numel(bc->out);
  std::vector<Real> out;
  if (bc->a_layout == Layout::kSame && bc->b_layout == Layout::kSame) {
    out.resize(n);
    rk::add(n, a.data().data(), b.data().data(), out.data());
  } else {
    out = expand(a, bc->a_layout, bc->a_off, n);
    const auto ex = expand(b, bc->b_layout, bc->b_off, n);
    rk::add(n, out.data(), ex.data(), out.data());
  }
  return detail::make_op("add", bc->out, std::move(out), {a, b}, [bc, n](Node& self) {
    if (wants_grad(self, 0)) {
      reduce_into(self.inputs[0]->grad_buffer(), self.grad.data(), n, bc->a_layout, bc->a_off);
    }
    if (wants_grad(self, 1)) {
      reduce_into(self.inputs[1]->grad_buffer(), self.grad.data(), n, bc->b_layout, bc->b_off);
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) { return add(a, scale(b, Real{-1})); }

Tensor mul(const Tensor& a, const Tensor& b) {
  auto bc = std::make_shared<Broadcast>(plan(a.shape(), b.shape(), "mul"));
  const std::size_t n = shape_numel(bc->out);
  auto ea = std::make_shared<std::vector<Real>>(expand(a, bc->a_layout, bc->a_off, n));
  auto eb = std::make_shared<std::vector<Real>>(expand(b, bc->b_layout, bc->b_off, n));
  std::vector<Real> out(n);
  rk::mul(n, ea->data(), eb->data(), out.data());
  return detail::make_op("mul", bc->out, std::move(out), {a, b}, [bc, n, ea, eb](Node& self) {
    std::vector<Real> contrib(n);
    if (wants_grad(self, 0)) {
      rk::mul(n, self.grad.data(), eb->data(), contrib.data());
      reduce_into(self.inputs[0]->grad_buffer(), contrib.data(), n, bc->a_layout, bc->a_off);
    }
    if (wants_grad(self, 1)) {
      rk::mul(n, self.grad.data(), ea->data(), contrib.data());
      reduce_into(self.inputs[1]->grad_buffer(), contrib.data(), n, bc->b_layout, bc->b_off);
    }
  });
}

Tensor scale(const Tensor& x, Real factor) {
  const auto src = x.data();
  std::vector<Real> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i] * factor;
  return detail::make_op("scale", x.shape(), std::move(out), {x}, [factor](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    rk::axpy(g.size(), factor, self.grad.data(), g.data());
  });
}

Tensor add_scalar(const Tensor& x, Real value) {
  const auto src = x.data();
  std::vector<Real> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = src[i] + value;
  return detail::make_op("add_scalar", x.shape(), std::move(out), {x}, [](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    rk::add(g.size(), g.data(), self.grad.data(), g.data());
  });
}

Tensor relu(const Tensor& x) {
  return unary(
      "relu", x, [](Real v) { return v > 0 ? v : Real{0}; },
      [](Real v, Real) { return v > 0 ? Real{1} : Real{0}; });
}

Tensor leaky_relu(const Tensor& x, Real slope) {
  return unary(
      "leaky_relu", x, [slope](Real v) { return v > 0 ? v : slope * v; },
      [slope](Real v, Real) { return v > 0 ? Real{1} : slope; });
}

Tensor gelu(const Tensor& x) {
  constexpr Real kC = Real(0.7978845608028654);  // sqrt(2/pi)
  constexpr Real kA = Real(0.044715);
  return unary(
      "gelu", x,
      [](Real v) { return Real(0.5) * v * (Real{1} + std::tanh(kC * (v + kA * v * v * v))); },
      [](Real v, Real) {
        const Real t = std::tanh(kC * (v + kA * v * v * v));
        return Real(0.5) * (Real{1} + t) +
               Real(0.5) * v * (Real{1} - t * t) * kC * (Real{1} + Real{3} * kA * v * v);
      });
}

Tensor sigmoid(const Tensor& x) {
  return unary(
      "sigmoid", x,
      [](Real v) {
        if (v >= 0) return Real{1} / (Real{1} + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real{1} + e);
      },
      [](Real, Real y) { return y * (Real{1} - y); });
}

Tensor tanh(const Tensor& x) {
  return unary(
      "tanh", x, [](Real v) { return std::tanh(v); }, [](Real, Real y) { return Real{1} - y * y; });
}

Tensor exp(const Tensor& x) {
  return unary(
      "exp", x, [](Real v) { return std::exp(v); }, [](Real, Real y) { return y; });
}

Tensor log(const Tensor& x) {
  return unary(
      "log", x, [](Real v) { return std::log(v); }, [](Real v, Real) { return Real{1} / v; });
}

Tensor abs(const Tensor& x) {
  return unary(
      "abs", x, [](Real v) { return std::abs(v); },
      [](Real v, Real) { return v > 0 ? Real{1} : (v < 0 ? Real{-1} : Real{0}); });
}

Tensor square(const Tensor& x) {
  return unary(
      "square", x, [](Real v) { return v * v; }, [](Real v, Real) { return Real{2} * v; });
}

Tensor softplus(const Tensor& x) {
  return unary(
      "softplus", x,
      [](Real v) { return std::max(v, Real{0}) + std::log1p(std::exp(-std::abs(v))); },
      [](Real v, Real) {
        if (v >= 0) return Real{1} / (Real{1} + std::exp(-v));
        const Real e = std::exp(v);
        return e / (Real{1} + e);
      });
}

Tensor sum(const Tensor& x) {
  Real acc = 0;
  for (Real v : x.data()) acc += v;
  return detail::make_op("sum", {}, {acc}, {x}, [](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const Real s = self.grad[0];
    for (auto& v : g) v += s;
  });
}

Tensor mean(const Tensor& x) {
  const Real n = static_cast<Real>(x.numel());
  Real acc = 0;
  for (Real v : x.data()) acc += v;
  return detail::make_op("mean", {}, {acc / n}, {x}, [n](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    const Real s = self.grad[0] / n;
    for (auto& v : g) v += s;
  });
}

Tensor mean_dim(const Tensor& x, std::size_t dim) {
  const Shape& s = x.shape();
  if (dim >= s.size()) throw ShapeError("mean_dim: axis out of range for " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < dim; ++i) outer *= s[i];
  for (std::size_t i = dim + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t len = s[dim];
  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != dim) out_shape.push_back(s[i]);
  }
  std::vector<Real> out(outer * inner, Real{0});
  const Real* src = x.data().data();
  for (std::size_t o = 0; o < outer; ++o) {
    Real* dst = out.data() + o * inner;
    for (std::size_t l = 0; l < len; ++l) rk::add(inner, dst, src + (o * len + l) * inner, dst);
    for (std::size_t i = 0; i < inner; ++i) dst[i] /= static_cast<Real>(len);
  }
  return detail::make_op("mean_dim", std::move(out_shape), std::move(out), {x},
                         [outer, inner, len](Node& self) {
                           auto& g = self.inputs[0]->grad_buffer();
                           const Real w = Real{1} / static_cast<Real>(len);
                           for (std::size_t o = 0; o < outer; ++o) {
                             for (std::size_t l = 0; l < len; ++l) {
                               rk::axpy(inner, w, self.grad.data() + o * inner,
                                        g.data() + (o * len + l) * inner);
                             }
                           }
                         });
}

}  // namespace CHOREO_REAL_NS
}  // namespace choreo
