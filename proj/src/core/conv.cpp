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

// conv3d lowers each chunk of output rows to a column matrix and multiplies
// it with the flattened filter bank. Chunk boundaries depend only on the
// geometry, so the summation order (and therefore every bit of the result)
// is fixed for a given build.

#include <Eigen/Dense>
#include <algorithm>
#include <limits>

#include "core/error.hpp"
#include "core/ops.hpp"

namespace mpk {

namespace {

using detail::grad_sink;
using detail::ImplPtr;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
using StridedMap = Eigen::Map<RowMat, 0, Eigen::OuterStride<>>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;

// Column-matrix budget per chunk, in doubles (~4 MiB).
constexpr std::size_t kColumnBudget = std::size_t{1} << 19;

struct Geometry {
  std::size_t cin, d, h, w;
  std::size_t cout, k, stride, pad;
  std::size_t od, oh, ow;

  std::size_t K() const { return cin * k * k * k; }
  std::size_t P() const { return od * oh * ow; }
  std::size_t rows() const { return od * oh; }  // output (d,h) rows of length ow
  bool pointwise() const { return k == 1 && stride == 1 && pad == 0; }
  std::size_t rows_per_chunk() const {
    return std::max<std::size_t>(1, kColumnBudget / std::max<std::size_t>(1, K() * ow));
  }
};

std::size_t out_extent(std::size_t n, std::size_t k, std::size_t stride, std::size_t pad, char axis) {
  if (n + 2 * pad < k) {
    throw ShapeError(std::string("conv3d: axis ") + axis + " of extent " + std::to_string(n) +
                     " with padding " + std::to_string(pad) + " is smaller than kernel " + std::to_string(k));
  }
  return (n + 2 * pad - k) / stride + 1;
}

// Fills col[K x (r1-r0)*ow] for output rows [r0, r1).
void im2col(const double* in, const Geometry& g, std::size_t r0, std::size_t r1, double* col) {
  const std::size_t cols = (r1 - r0) * g.ow;
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t kd = 0; kd < g.k; ++kd) {
      for (std::size_t kh = 0; kh < g.k; ++kh) {
        for (std::size_t kw = 0; kw < g.k; ++kw) {
          double* dst = col + (((c * g.k + kd) * g.k + kh) * g.k + kw) * cols;
          for (std::size_t r = r0; r < r1; ++r) {
            double* drow = dst + (r - r0) * g.ow;
            const auto id = static_cast<std::ptrdiff_t>((r / g.oh) * g.stride + kd) - pad;
            const auto ih = static_cast<std::ptrdiff_t>((r % g.oh) * g.stride + kh) - pad;
            if (id < 0 || ih < 0 || id >= static_cast<std::ptrdiff_t>(g.d) ||
                ih >= static_cast<std::ptrdiff_t>(g.h)) {
              std::fill(drow, drow + g.ow, 0.0);
              continue;
            }
            const double* src = in + ((c * g.d + id) * g.h + ih) * g.w;
            for (std::size_t x = 0; x < g.ow; ++x) {
              const auto iw = static_cast<std::ptrdiff_t>(x * g.stride + kw) - pad;
              drow[x] = (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.w)) ? src[iw] : 0.0;
            }
          }
        }
      }
    }
  }
}

// Scatter-adds col back into the input gradient (transpose of im2col).
void col2im(const double* col, const Geometry& g, std::size_t r0, std::size_t r1, double* in_grad) {
  const std::size_t cols = (r1 - r0) * g.ow;
  const auto pad = static_cast<std::ptrdiff_t>(g.pad);
  for (std::size_t c = 0; c < g.cin; ++c) {
    for (std::size_t kd = 0; kd < g.k; ++kd) {
      for (std::size_t kh = 0; kh < g.k; ++kh) {
        for (std::size_t kw = 0; kw < g.k; ++kw) {
          const double* src = col + (((c * g.k + kd) * g.k + kh) * g.k + kw) * cols;
          for (std::size_t r = r0; r < r1; ++r) {
            const double* srow = src + (r - r0) * g.ow;
            const auto id = static_cast<std::ptrdiff_t>((r / g.oh) * g.stride + kd) - pad;
            const auto ih = static_cast<std::ptrdiff_t>((r % g.oh) * g.stride + kh) - pad;
            if (id < 0 || ih < 0 || id >= static_cast<std::ptrdiff_t>(g.d) ||
                ih >= static_cast<std::ptrdiff_t>(g.h)) {
              continue;
            }
            double* dst = in_grad + ((c * g.d + id) * g.h + ih) * g.w;
            for (std::size_t x = 0; x < g.ow; ++x) {
              const auto iw = static_cast<std::ptrdiff_t>(x * g.stride + kw) - pad;
              if (iw >= 0 && iw < static_cast<std::ptrdiff_t>(g.w)) dst[iw] += srow[x];
            }
          }
        }
      }
    }
  }
}

void conv_forward(const double* in, const double* weight, const double* bias, const Geometry& g, double* out) {
  const std::size_t K = g.K(), P = g.P();
  ConstMap wm(weight, g.cout, K);
  if (g.pointwise()) {
    MutMap(out, g.cout, P).noalias() = wm * ConstMap(in, K, P);
  } else {
    const std::size_t step = g.rows_per_chunk();
    std::vector<double> col(K * step * g.ow);
    for (std::size_t r0 = 0; r0 < g.rows(); r0 += step) {
      const std::size_t r1 = std::min(g.rows(), r0 + step);
      const std::size_t cols = (r1 - r0) * g.ow;
      im2col(in, g, r0, r1, col.data());
      StridedMap blk(out + r0 * g.ow, g.cout, cols, Eigen::OuterStride<>(P));
      blk.noalias() = wm * ConstMap(col.data(), K, cols);
    }
  }
  if (bias) {
    for (std::size_t c = 0; c < g.cout; ++c) {
      double* o = out + c * P;
      for (std::size_t p = 0; p < P; ++p) o[p] += bias[c];
    }
  }
}

void conv_backward(const double* in, const double* weight, const double* grad_out, const Geometry& g,
                   double* grad_in, double* grad_w, double* grad_b) {
  const std::size_t K = g.K(), P = g.P();
  ConstMap wm(weight, g.cout, K);
  if (grad_b) {
    for (std::size_t c = 0; c < g.cout; ++c) {
      const double* go = grad_out + c * P;
      double s = 0.0;
      for (std::size_t p = 0; p < P; ++p) s += go[p];
      grad_b[c] += s;
    }
  }
  if (!grad_in && !grad_w) return;
  if (g.pointwise()) {
    ConstMap gm(grad_out, g.cout, P);
    if (grad_w) MutMap(grad_w, g.cout, K).noalias() += gm * ConstMap(in, K, P).transpose();
    if (grad_in) MutMap(grad_in, K, P).noalias() += wm.transpose() * gm;
    return;
  }
  const std::size_t step = g.rows_per_chunk();
  std::vector<double> col(K * step * g.ow);
  for (std::size_t r0 = 0; r0 < g.rows(); r0 += step) {
    const std::size_t r1 = std::min(g.rows(), r0 + step);
    const std::size_t cols = (r1 - r0) * g.ow;
    ConstStridedMap gblk(grad_out + r0 * g.ow, g.cout, cols, Eigen::OuterStride<>(P));
    if (grad_w) {
      im2col(in, g, r0, r1, col.data());
      MutMap(grad_w, g.cout, K).noalias() += gblk * ConstMap(col.data(), K, cols).transpose();
    }
    if (grad_in) {
      MutMap(col.data(), K, cols).noalias() = wm.transpose() * gblk;
      col2im(col.data(), g, r0, r1, grad_in);
    }
  }
}

}  // namespace

Tensor conv3d(const Tensor& input, const Tensor& weight, const Tensor& bias, std::size_t stride,
              std::size_t padding) {
  if (input.rank() != 4) throw ShapeError("conv3d: input must be [C,D,H,W], got " + shape_str(input.shape()));
  if (weight.rank() != 5 || weight.dim(2) != weight.dim(3) || weight.dim(3) != weight.dim(4)) {
    throw ShapeError("conv3d: weight must be [C_out,C_in,k,k,k], got " + shape_str(weight.shape()));
  }
  if (weight.dim(1) != input.dim(0)) {
    throw ShapeError("conv3d: weight expects C_in=" + std::to_string(weight.dim(1)) + " but input has " +
                     std::to_string(input.dim(0)) + " channels");
  }
  if (stride == 0) throw ShapeError("conv3d: stride must be positive");
  if (bias.defined() && bias.shape() != Shape{weight.dim(0)}) {
    throw ShapeError("conv3d: bias shape " + shape_str(bias.shape()) + " does not match C_out=" +
                     std::to_string(weight.dim(0)));
  }
  Geometry g{};
  g.cin = input.dim(0);
  g.d = input.dim(1);
  g.h = input.dim(2);
  g.w = input.dim(3);
  g.cout = weight.dim(0);
  g.k = weight.dim(2);
  g.stride = stride;
  g.pad = padding;
  g.od = out_extent(g.d, g.k, stride, padding, 'D');
  g.oh = out_extent(g.h, g.k, stride, padding, 'H');
  g.ow = out_extent(g.w, g.k, stride, padding, 'W');

  std::vector<double> out(g.cout * g.P());
  conv_forward(input.data().data(), weight.data().data(), bias.defined() ? bias.data().data() : nullptr, g,
               out.data());
  Tensor r(Shape{g.cout, g.od, g.oh, g.ow}, std::move(out));

  ImplPtr xi = input.impl(), wi = weight.impl(), bi = bias.defined() ? bias.impl() : nullptr;
  detail::record(r, "conv3d", {&input, &weight, &bias}, [xi, wi, bi, g](const std::vector<double>& go) {
    conv_backward(xi->data.data(), wi->data.data(), go.data(), g, grad_sink(xi), grad_sink(wi), grad_sink(bi));
  });
  return r;
}

Tensor maxpool3d(const Tensor& input, std::size_t k, std::size_t stride) {
  if (input.rank() != 4) throw ShapeError("maxpool3d: input must be [C,D,H,W], got " + shape_str(input.shape()));
  if (k == 0 || stride == 0) throw ShapeError("maxpool3d: kernel and stride must be positive");
  const std::size_t c = input.dim(0), d = input.dim(1), h = input.dim(2), w = input.dim(3);
  const char names[3] = {'D', 'H', 'W'};
  const std::size_t dims[3] = {d, h, w};
  for (int i = 0; i < 3; ++i) {
    if (dims[i] < k) {
      throw ShapeError(std::string("maxpool3d: axis ") + names[i] + " of extent " + std::to_string(dims[i]) +
                       " is smaller than window " + std::to_string(k));
    }
  }
  const std::size_t od = (d - k) / stride + 1, oh = (h - k) / stride + 1, ow = (w - k) / stride + 1;
  const bool keep_arg = detail::will_record({&input});
  std::vector<double> out(c * od * oh * ow);
  std::vector<std::size_t> arg(keep_arg ? out.size() : 0);
  auto x = input.data();
  std::size_t o = 0;
  for (std::size_t ci = 0; ci < c; ++ci) {
    for (std::size_t zd = 0; zd < od; ++zd) {
      for (std::size_t zh = 0; zh < oh; ++zh) {
        for (std::size_t zw = 0; zw < ow; ++zw, ++o) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_i = std::numeric_limits<std::size_t>::max();
          for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = 0; b < k; ++b) {
              const std::size_t row = ((ci * d + zd * stride + a) * h + zh * stride + b) * w + zw * stride;
              for (std::size_t e = 0; e < k; ++e) {
                if (best_i == std::numeric_limits<std::size_t>::max() || x[row + e] > best) {
                  best = x[row + e];
                  best_i = row + e;
                }
              }
            }
          }
          out[o] = best;
          if (keep_arg) arg[o] = best_i;
        }
      }
    }
  }
  Tensor r(Shape{c, od, oh, ow}, std::move(out));
  ImplPtr xi = input.impl();
  detail::record(r, "maxpool3d", {&input}, [xi, arg = std::move(arg)](const std::vector<double>& g) {
    if (double* gx = grad_sink(xi)) {
      for (std::size_t i = 0; i < arg.size(); ++i) gx[arg[i]] += g[i];
    }
  });
  return r;
}

}  // namespace mpk
