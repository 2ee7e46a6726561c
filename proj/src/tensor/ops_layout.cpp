// Copyright 2026 The choreo Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <numeric>

#include "autograd_internal.hpp"
#include "choreo/tensor/ops.hpp"
#include "real_kernels.hpp"

namespace choreo {
inline namespace CHOREO_REAL_NS {

using detail::Node;
using detail::wants_grad;

namespace {

void check_axis(const Shape& shape, std::size_t dim, const char* op) {
  if (dim >= shape.size()) {
    throw ShapeError(std::string(op) + ": axis " + std::to_string(dim) + " out of range for " +
                     shape_str(shape));
  }
}

std::size_t prod(const Shape& s, std::size_t from, std::size_t to) {
  std::size_t p = 1;
  for (std::size_t i = from; i < to; ++i) p *= s[i];
  return p;
}

// out[j] = in[src[j]] for a transposition of two axes.
std::vector<std::size_t> transpose_map(const Shape& in_shape, std::size_t d0, std::size_t d1) {
  const std::size_t nd = in_shape.size();
  std::vector<std::size_t> in_strides(nd, 1);
  for (std::size_t i = nd; i-- > 1;) in_strides[i - 1] = in_strides[i] * in_shape[i];
  Shape out_shape = in_shape;
  std::swap(out_shape[d0], out_shape[d1]);
  std::vector<std::size_t> strides = in_strides;
  std::swap(strides[d0], strides[d1]);

  const std::size_t n = shape_numel(in_shape);
  std::vector<std::size_t> map(n);
  std::vector<std::size_t> idx(nd, 0);
  std::size_t offset = 0;
  for (std::size_t j = 0; j < n; ++j) {
    map[j] = offset;
    for (std::size_t ax = nd; ax-- > 0;) {
      if (++idx[ax] < out_shape[ax]) {
        offset += strides[ax];
        break;
      }
      offset -= strides[ax] * (idx[ax] - 1);
      idx[ax] = 0;
    }
  }
  return map;
}

}  // namespace

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape " + shape_str(x.shape()) + " -> " + shape_str(shape) +
                     " changes element count");
  }
  std::vector<Real> out(x.data().begin(), x.data().end());
  return detail::make_op("reshape", std::move(shape), std::move(out), {x}, [](Node& self) {
    auto& g = self.inputs[0]->grad_buffer();
    rk::add(g.size(), g.data(), self.grad.data(), g.data());
  });
}

Tensor transpose(const Tensor& x, std::size_t dim0, std::size_t dim1) {
  check_axis(x.shape(), dim0, "transpose");
  check_axis(x.shape(), dim1, "transpose");
  Shape out_shape = x.shape();
  std::swap(out_shape[dim0], out_shape[dim1]);
  auto map = std::make_shared<std::vector<std::size_t>>(transpose_map(x.shape(), dim0, dim1));
  std::vector<Real> out(x.numel());
  const Real* src = x.data().data();
  for (std::size_t j = 0; j < out.size(); ++j) out[j] = src[(*map)[j]];
  return detail::make_op("transpose", std::move(out_shape), std::move(out), {x},
                         [map](Node& self) {
                           auto& g = self.inputs[0]->grad_buffer();
                           for (std::size_t j = 0; j < map->size(); ++j) {
                             g[(*map)[j]] += self.grad[j];
                           }
                         });
}

Tensor narrow(const Tensor& x, std::size_t dim, std::size_t start, std::size_t length) {
  const Shape& s = x.shape();
  check_axis(s, dim, "narrow");
  if (start + length > s[dim]) {
    throw ShapeError("narrow [" + std::to_string(start) + ", " + std::to_string(start + length) +
                     ") exceeds axis " + std::to_string(dim) + " of " + shape_str(s));
  }
  const std::size_t outer = prod(s, 0, dim);
  const std::size_t inner = prod(s, dim + 1, s.size());
  const std::size_t full = s[dim];
  Shape out_shape = s;
  out_shape[dim] = length;
  std::vector<Real> out(outer * length * inner);
  const Real* src = x.data().data();
  for (std::size_t o = 0; o < outer; ++o) {
    std::copy_n(src + (o * full + start) * inner, length * inner, out.data() + o * length * inner);
  }
  return detail::make_op("narrow", std::move(out_shape), std::move(out), {x},
                         [outer, inner, full, start, length](Node& self) {
                           auto& g = self.inputs[0]->grad_buffer();
                           for (std::size_t o = 0; o < outer; ++o) {
                             Real* dst = g.data() + (o * full + start) * inner;
                             rk::add(length * inner, dst, self.grad.data() + o * length * inner,
                                     dst);
                           }
                         });
}

Tensor concat(const std::vector<Tensor>& parts, std::size_t dim) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const Shape& first = parts.front().shape();
  check_axis(first, dim, "concat");
  std::vector<std::size_t> widths;
  std::size_t total = 0;
  for (const auto& p : parts) {
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) ok = i == dim || s[i] == first[i];
    if (!ok) {
      throw ShapeError("concat along axis " + std::to_string(dim) + ": " + shape_str(first) +
                       " vs " + shape_str(s));
    }
    widths.push_back(s[dim]);
    total += s[dim];
  }
  const std::size_t outer = prod(first, 0, dim);
  const std::size_t inner = prod(first, dim + 1, first.size());
  Shape out_shape = first;
  out_shape[dim] = total;
  std::vector<Real> out(outer * total * inner);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Real* src = parts[p].data().data();
    const std::size_t w = widths[p] * inner;
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(src + o * w, w, out.data() + o * total * inner + offset);
    }
    offset += w;
  }
  return detail::make_op("concat", std::move(out_shape), std::move(out), parts,
                         [outer, inner, total, widths](Node& self) {
                           std::size_t off = 0;
                           for (std::size_t p = 0; p < widths.size(); ++p) {
                             const std::size_t w = widths[p] * inner;
                             if (wants_grad(self, p)) {
                               auto& g = self.inputs[p]->grad_buffer();
                               for (std::size_t o = 0; o < outer; ++o) {
                                 Real* dst = g.data() + o * w;
                                 rk::add(w, dst, self.grad.data() + o * total * inner + off, dst);
                               }
                             }
                             off += w;
                           }
                         });
}

Tensor detach(const Tensor& x) { return x.detach(); }

}  // namespace CHOREO_REAL_NS
}  // namespace choreo
