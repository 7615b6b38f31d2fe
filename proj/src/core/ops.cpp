// Copyright (c) 2026 The mpfkansc Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "core/ops.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/error.hpp"

namespace mpk {

namespace {

using detail::grad_sink;
using detail::ImplPtr;
using detail::TensorImpl;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
}

std::vector<std::size_t> strides_of(const Shape& s) {
  std::vector<std::size_t> st(s.size(), 1);
  for (std::size_t i = s.size(); i-- > 1;) st[i - 1] = st[i] * s[i];
  return st;
}

template <class Fwd, class Deriv>
Tensor unary(const Tensor& a, const char* op, Fwd f, Deriv df) {
  auto in = a.data();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  Tensor r(a.shape(), std::move(out));
  ImplPtr ai = a.impl();
  const TensorImpl* ri = r.impl().get();
  detail::record(r, op, {&a}, [ai, ri, df](const std::vector<double>& g) {
    double* ga = grad_sink(ai);
    if (!ga) return;
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * df(ai->data[i], ri->data[i]);
  });
  return r;
}

// Maps every flat input index to the flat index of the reduced output.
struct Reduction {
  Shape out_shape;
  std::vector<std::size_t> target;
};

Reduction plan_reduction(const Shape& in, std::vector<std::size_t> axes, const char* op) {
  std::sort(axes.begin(), axes.end());
  if (std::adjacent_find(axes.begin(), axes.end()) != axes.end()) {
    throw ShapeError(std::string(op) + ": repeated axis");
  }
  if (axes.empty()) throw ShapeError(std::string(op) + ": empty axis set");
  for (auto ax : axes) {
    if (ax >= in.size()) throw ShapeError(std::string(op) + ": axis out of range for " + shape_str(in));
  }
  std::vector<bool> reduced(in.size(), false);
  for (auto ax : axes) reduced[ax] = true;

  Reduction plan;
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (!reduced[i]) plan.out_shape.push_back(in[i]);
  }
  // Output stride contributed by each input axis (0 for reduced axes).
  std::vector<std::size_t> contrib(in.size(), 0);
  std::size_t stride = 1;
  for (std::size_t i = in.size(); i-- > 0;) {
    if (!reduced[i]) {
      contrib[i] = stride;
      stride *= in[i];
    }
  }
  const std::size_t n = shape_numel(in);
  plan.target.resize(n);
  std::vector<std::size_t> idx(in.size(), 0);
  std::size_t off = 0;
  for (std::size_t flat = 0; flat < n; ++flat) {
    plan.target[flat] = off;
    for (std::size_t ax = in.size(); ax-- > 0;) {
      ++idx[ax];
      off += contrib[ax];
      if (idx[ax] < in[ax]) break;
      off -= contrib[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
  return plan;
}

}  // namespace

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] + y[i];
  Tensor r(a.shape(), std::move(out));
  ImplPtr ai = a.impl(), bi = b.impl();
  detail::record(r, "add", {&a, &b}, [ai, bi](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (double* gb = grad_sink(bi)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
    }
  });
  return r;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - y[i];
  Tensor r(a.shape(), std::move(out));
  ImplPtr ai = a.impl(), bi = b.impl();
  detail::record(r, "sub", {&a, &b}, [ai, bi](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (double* gb = grad_sink(bi)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
  return r;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  auto x = a.data(), y = b.data();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * y[i];
  Tensor r(a.shape(), std::move(out));
  ImplPtr ai = a.impl(), bi = b.impl();
  detail::record(r, "mul", {&a, &b}, [ai, bi](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bi->data[i];
    }
    if (double* gb = grad_sink(bi)) {
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * ai->data[i];
    }
  });
  return r;
}

Tensor scale(const Tensor& a, double s) {
  return unary(a, "scale", [s](double x) { return s * x; }, [s](double, double) { return s; });
}

Tensor sigmoid(const Tensor& a) {
  return unary(
      a, "sigmoid",
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(const Tensor& a) {
  return unary(a, "relu", [](double x) { return x > 0 ? x : 0.0; },
               [](double x, double) { return x > 0 ? 1.0 : 0.0; });
}

Tensor silu(const Tensor& a) {
  return unary(
      a, "silu", [](double x) { return x / (1.0 + std::exp(-x)); },
      [](double x, double) {
        const double s = 1.0 / (1.0 + std::exp(-x));
        return s * (1.0 + x * (1.0 - s));
      });
}

Tensor log(const Tensor& a) {
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(const Tensor& a) {
  return unary(a, "sqrt", [](double x) { return std::sqrt(x); },
               [](double, double y) { return y > 0 ? 0.5 / y : 0.0; });
}

Tensor clamp(const Tensor& a, double lo, double hi) {
  return unary(a, "clamp", [lo, hi](double x) { return std::clamp(x, lo, hi); },
               [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw ShapeError("matmul: incompatible shapes " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() = ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, n);
  Tensor r(Shape{m, n}, std::move(out));
  ImplPtr ai = a.impl(), bi = b.impl();
  detail::record(r, "matmul", {&a, &b}, [ai, bi, m, k, n](const std::vector<double>& g) {
    ConstMap gm(g.data(), m, n);
    if (double* ga = grad_sink(ai)) {
      MutMap(ga, m, k).noalias() += gm * ConstMap(bi->data.data(), k, n).transpose();
    }
    if (double* gb = grad_sink(bi)) {
      MutMap(gb, k, n).noalias() += ConstMap(ai->data.data(), m, k).transpose() * gm;
    }
  });
  return r;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  if (a.rank() == 0 || a.rank() != b.rank() ||
      !std::equal(a.shape().begin() + 1, a.shape().end(), b.shape().begin() + 1)) {
    throw ShapeError("concat_channels: non-channel dims differ " + shape_str(a.shape()) + " vs " +
                     shape_str(b.shape()));
  }
  Shape s = a.shape();
  s[0] += b.dim(0);
  std::vector<double> out;
  out.reserve(a.numel() + b.numel());
  out.insert(out.end(), a.data().begin(), a.data().end());
  out.insert(out.end(), b.data().begin(), b.data().end());
  Tensor r(std::move(s), std::move(out));
  ImplPtr ai = a.impl(), bi = b.impl();
  const std::size_t na = a.numel();
  detail::record(r, "concat_channels", {&a, &b}, [ai, bi, na](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t i = 0; i < na; ++i) ga[i] += g[i];
    }
    if (double* gb = grad_sink(bi)) {
      for (std::size_t i = na; i < g.size(); ++i) gb[i - na] += g[i];
    }
  });
  return r;
}

Tensor slice_channels(const Tensor& a, std::size_t begin, std::size_t end) {
  if (a.rank() == 0 || begin >= end || end > a.dim(0)) {
    throw ShapeError("slice_channels: range [" + std::to_string(begin) + "," + std::to_string(end) +
                     ") invalid for " + shape_str(a.shape()));
  }
  const std::size_t row = a.numel() / a.dim(0);
  Shape s = a.shape();
  s[0] = end - begin;
  std::vector<double> out(a.data().begin() + begin * row, a.data().begin() + end * row);
  Tensor r(std::move(s), std::move(out));
  ImplPtr ai = a.impl();
  const std::size_t off = begin * row;
  detail::record(r, "slice_channels", {&a}, [ai, off](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[off + i] += g[i];
    }
  });
  return r;
}

Tensor stack(std::span<const Tensor> parts) {
  if (parts.empty()) throw ShapeError("stack: no tensors given");
  const Shape& base = parts[0].shape();
  std::vector<double> out;
  out.reserve(parts.size() * parts[0].numel());
  for (const auto& p : parts) {
    if (p.shape() != base) throw ShapeError("stack: shape mismatch " + shape_str(base) + " vs " + shape_str(p.shape()));
    out.insert(out.end(), p.data().begin(), p.data().end());
  }
  Shape s{parts.size()};
  s.insert(s.end(), base.begin(), base.end());
  Tensor r(std::move(s), std::move(out));
  if (Tape::active()) {
    bool any = false;
    for (const auto& p : parts) any = any || p.requires_grad();
    if (any) {
      std::vector<ImplPtr> ins;
      for (const auto& p : parts) ins.push_back(p.impl());
      const std::size_t each = parts[0].numel();
      Tape::active()->push("stack", r.impl(), [ins, each](const std::vector<double>& g) {
        for (std::size_t k = 0; k < ins.size(); ++k) {
          if (double* gi = grad_sink(ins[k])) {
            for (std::size_t i = 0; i < each; ++i) gi[i] += g[k * each + i];
          }
        }
      });
    }
  }
  return r;
}

Tensor sum_all(const Tensor& a) {
  auto x = a.data();
  double s = 0.0;
  for (double v : x) s += v;
  Tensor r = Tensor::scalar(s);
  ImplPtr ai = a.impl();
  detail::record(r, "sum_all", {&a}, [ai](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t i = 0; i < ai->data.size(); ++i) ga[i] += g[0];
    }
  });
  return r;
}

Tensor mean_all(const Tensor& a) { return scale(sum_all(a), 1.0 / static_cast<double>(a.numel())); }

Tensor mean_over(const Tensor& a, std::vector<std::size_t> axes) {
  auto plan = plan_reduction(a.shape(), std::move(axes), "mean_over");
  const std::size_t n_out = shape_numel(plan.out_shape);
  const double inv = static_cast<double>(n_out) / static_cast<double>(a.numel());
  std::vector<double> out(n_out, 0.0);
  auto x = a.data();
  for (std::size_t i = 0; i < x.size(); ++i) out[plan.target[i]] += x[i];
  for (auto& v : out) v *= inv;
  Tensor r(plan.out_shape, std::move(out));
  ImplPtr ai = a.impl();
  detail::record(r, "mean_over", {&a}, [ai, target = std::move(plan.target), inv](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t i = 0; i < target.size(); ++i) ga[i] += g[target[i]] * inv;
    }
  });
  return r;
}

Tensor max_over(const Tensor& a, std::vector<std::size_t> axes) {
  auto plan = plan_reduction(a.shape(), std::move(axes), "max_over");
  const std::size_t n_out = shape_numel(plan.out_shape);
  std::vector<double> out(n_out, 0.0);
  std::vector<std::size_t> arg(n_out, static_cast<std::size_t>(-1));
  auto x = a.data();
  for (std::size_t i = 0; i < x.size(); ++i) {
    const auto t = plan.target[i];
    if (arg[t] == static_cast<std::size_t>(-1) || x[i] > out[t]) {
      out[t] = x[i];
      arg[t] = i;
    }
  }
  Tensor r(plan.out_shape, std::move(out));
  ImplPtr ai = a.impl();
  detail::record(r, "max_over", {&a}, [ai, arg = std::move(arg)](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t t = 0; t < arg.size(); ++t) ga[arg[t]] += g[t];
    }
  });
  return r;
}

Tensor softmax(const Tensor& a, std::size_t axis) {
  const Shape& s = a.shape();
  if (axis >= s.size()) throw ShapeError("softmax: axis out of range for " + shape_str(s));
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t n = s[axis];
  auto x = a.data();
  std::vector<double> out(x.size());
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const std::size_t base = o * n * inner + in;
      double mx = x[base];
      for (std::size_t j = 1; j < n; ++j) mx = std::max(mx, x[base + j * inner]);
      double z = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        out[base + j * inner] = std::exp(x[base + j * inner] - mx);
        z += out[base + j * inner];
      }
      for (std::size_t j = 0; j < n; ++j) out[base + j * inner] /= z;
    }
  }
  Tensor r(s, std::move(out));
  ImplPtr ai = a.impl();
  const TensorImpl* ri = r.impl().get();
  detail::record(r, "softmax", {&a}, [ai, ri, outer, inner, n](const std::vector<double>& g) {
    double* ga = grad_sink(ai);
    if (!ga) return;
    const auto& y = ri->data;
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        const std::size_t base = o * n * inner + in;
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += g[base + j * inner] * y[base + j * inner];
        for (std::size_t j = 0; j < n; ++j) {
          ga[base + j * inner] += y[base + j * inner] * (g[base + j * inner] - dot);
        }
      }
    }
  });
  return r;
}

std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& perm) {
  std::vector<std::size_t> inv(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inv[perm[i]] = i;
  return inv;
}

Tensor permute_axes(const Tensor& a, const std::vector<std::size_t>& perm) {
  const Shape& s = a.shape();
  if (perm.size() != s.size()) throw ShapeError("permute_axes: permutation rank differs from " + shape_str(s));
  std::vector<bool> seen(perm.size(), false);
  for (auto p : perm) {
    if (p >= perm.size() || seen[p]) throw ShapeError("permute_axes: not a permutation");
    seen[p] = true;
  }
  Shape out_shape(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out_shape[i] = s[perm[i]];
  const auto in_strides = strides_of(s);
  const std::size_t n = a.numel();
  // src[o] = flat input offset feeding output element o.
  std::vector<std::size_t> src(n);
  std::vector<std::size_t> idx(s.size(), 0);
  std::size_t off = 0;
  for (std::size_t o = 0; o < n; ++o) {
    src[o] = off;
    for (std::size_t ax = s.size(); ax-- > 0;) {
      ++idx[ax];
      off += in_strides[perm[ax]];
      if (idx[ax] < out_shape[ax]) break;
      off -= in_strides[perm[ax]] * idx[ax];
      idx[ax] = 0;
    }
  }
  auto x = a.data();
  std::vector<double> out(n);
  for (std::size_t o = 0; o < n; ++o) out[o] = x[src[o]];
  Tensor r(std::move(out_shape), std::move(out));
  ImplPtr ai = a.impl();
  detail::record(r, "permute_axes", {&a}, [ai, src = std::move(src)](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t o = 0; o < src.size(); ++o) ga[src[o]] += g[o];
    }
  });
  return r;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw ShapeError("reshape: " + shape_str(a.shape()) + " cannot become " + shape_str(shape));
  }
  Tensor r(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
  ImplPtr ai = a.impl();
  detail::record(r, "reshape", {&a}, [ai](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
  });
  return r;
}

Tensor broadcast_to(const Tensor& a, const Shape& shape) {
  const Shape& s = a.shape();
  if (s.size() != shape.size()) {
    throw ShapeError("broadcast_to: rank mismatch " + shape_str(s) + " -> " + shape_str(shape));
  }
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != shape[i] && s[i] != 1) {
      throw ShapeError("broadcast_to: cannot expand " + shape_str(s) + " to " + shape_str(shape));
    }
  }
  auto in_strides = strides_of(s);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == 1) in_strides[i] = 0;
  }
  const std::size_t n = shape_numel(shape);
  std::vector<std::size_t> src(n);
  std::vector<std::size_t> idx(s.size(), 0);
  std::size_t off = 0;
  for (std::size_t o = 0; o < n; ++o) {
    src[o] = off;
    for (std::size_t ax = s.size(); ax-- > 0;) {
      ++idx[ax];
      off += in_strides[ax];
      if (idx[ax] < shape[ax]) break;
      off -= in_strides[ax] * idx[ax];
      idx[ax] = 0;
    }
  }
  auto x = a.data();
  std::vector<double> out(n);
  for (std::size_t o = 0; o < n; ++o) out[o] = x[src[o]];
  Tensor r(shape, std::move(out));
  ImplPtr ai = a.impl();
  detail::record(r, "broadcast_to", {&a}, [ai, src = std::move(src)](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) {
      for (std::size_t o = 0; o < src.size(); ++o) ga[src[o]] += g[o];
    }
  });
  return r;
}

Tensor select(const Tensor& a, std::size_t flat_index) {
  if (flat_index >= a.numel()) {
    throw ShapeError("select: index " + std::to_string(flat_index) + " out of range for " + shape_str(a.shape()));
  }
  Tensor r = Tensor::scalar(a.data()[flat_index]);
  ImplPtr ai = a.impl();
  detail::record(r, "select", {&a}, [ai, flat_index](const std::vector<double>& g) {
    if (double* ga = grad_sink(ai)) ga[flat_index] += g[0];
  });
  return r;
}

}  // namespace mpk
