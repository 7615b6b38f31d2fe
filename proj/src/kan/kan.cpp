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

#include "kan/kan.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace mpk::kan {

namespace {

using detail::grad_sink;
using detail::ImplPtr;

double silu_value(double x) { return x / (1.0 + std::exp(-x)); }

double silu_slope(double x) {
  const double s = 1.0 / (1.0 + std::exp(-x));
  return s * (1.0 + x * (1.0 - s));
}

// Runs the recursion up to `degree - 1` in `work`, returning the
// degree-(k-1) values so the caller can finish either the basis or its
// derivative. `work` must hold knot_count - 1 entries.
void lower_order_bases(double x, const std::vector<double>& t, std::size_t degree, std::vector<double>& work) {
  const std::size_t intervals = t.size() - 1;
  for (std::size_t i = 0; i < intervals; ++i) work[i] = (t[i] <= x && x < t[i + 1]) ? 1.0 : 0.0;
  for (std::size_t d = 1; d < degree; ++d) {
    for (std::size_t i = 0; i + d < intervals; ++i) {
      const double left = (x - t[i]) / (t[i + d] - t[i]);
      const double right = (t[i + d + 1] - x) / (t[i + d + 1] - t[i + 1]);
      work[i] = left * work[i] + right * work[i + 1];
    }
  }
}

}  // namespace

std::vector<double> SplineGrid::knots() const {
  std::vector<double> t(knot_count());
  const double h = (hi - lo) / static_cast<double>(grid_size);
  for (std::size_t i = 0; i < t.size(); ++i) {
    t[i] = lo + (static_cast<double>(i) - static_cast<double>(degree)) * h;
  }
  return t;
}

void SplineGrid::validate() const {
  if (grid_size == 0) throw ConfigError("spline grid_size must be positive");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw ConfigError("spline domain must satisfy lo < hi");
}

void bspline_basis_and_derivative(double x, const SplineGrid& grid, std::span<double> basis,
                                  std::span<double> derivative) {
  if (!std::isfinite(x)) throw NumericError("bspline_basis: non-finite input");
  const std::size_t n = grid.basis_count();
  if (basis.size() != n || (!derivative.empty() && derivative.size() != n)) {
    throw ShapeError("bspline_basis: output spans must hold " + std::to_string(n) + " values");
  }
  const bool inside = x >= grid.lo && x <= grid.hi;
  const double xc = std::clamp(x, grid.lo, grid.hi);
  const auto t = grid.knots();
  const std::size_t k = grid.degree;
  std::vector<double> work(t.size() - 1);

  if (k == 0) {
    lower_order_bases(xc, t, 0, work);
    std::copy_n(work.begin(), n, basis.begin());
    if (!derivative.empty()) std::fill(derivative.begin(), derivative.end(), 0.0);
    return;
  }
  lower_order_bases(xc, t, k, work);
  // work now holds degree k-1 values for indices 0 .. intervals-k.
  for (std::size_t i = 0; i < n; ++i) {
    const double left = (xc - t[i]) / (t[i + k] - t[i]);
    const double right = (t[i + k + 1] - xc) / (t[i + k + 1] - t[i + 1]);
    basis[i] = left * work[i] + right * work[i + 1];
    if (!derivative.empty()) {
      const double kd = static_cast<double>(k);
      derivative[i] = inside ? kd / (t[i + k] - t[i]) * work[i] - kd / (t[i + k + 1] - t[i + 1]) * work[i + 1] : 0.0;
    }
  }
}

std::vector<double> bspline_basis(double x, const SplineGrid& grid) {
  std::vector<double> b(grid.basis_count());
  bspline_basis_and_derivative(x, grid, b, {});
  return b;
}

std::size_t KanNetwork::in_dim() const { return layers.empty() ? 0 : layers.front().in_dim; }
std::size_t KanNetwork::out_dim() const { return layers.empty() ? 0 : layers.back().out_dim; }

std::vector<Tensor> KanNetwork::parameters() const {
  std::vector<Tensor> out;
  for (const auto& l : layers) {
    auto p = l.parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

void KanNetwork::validate() const {
  if (layers.empty()) throw ConfigError("KAN network has no layers");
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    if (layers[l].out_dim != layers[l + 1].in_dim) {
      throw ConfigError("KAN layer " + std::to_string(l) + " emits " + std::to_string(layers[l].out_dim) +
                        " features but layer " + std::to_string(l + 1) + " expects " +
                        std::to_string(layers[l + 1].in_dim));
    }
  }
}

KanLayer kan_init(std::size_t in_dim, std::size_t out_dim, const SplineGrid& grid, std::uint64_t seed) {
  if (in_dim == 0 || out_dim == 0) throw ConfigError("KAN layer dims must be positive");
  grid.validate();
  Rng rng(seed);
  KanLayer layer;
  layer.in_dim = in_dim;
  layer.out_dim = out_dim;
  layer.grid = grid;
  const double base_bound = std::sqrt(6.0 / static_cast<double>(in_dim));
  const double coeff_bound = 0.1 / static_cast<double>(grid.basis_count());
  layer.base_weight = Tensor::uniform({out_dim, in_dim}, -base_bound, base_bound, rng);
  layer.spline_weight = Tensor::full({out_dim, in_dim}, 1.0);
  layer.spline_coeffs = Tensor::uniform({out_dim, in_dim, grid.basis_count()}, -coeff_bound, coeff_bound, rng);
  for (auto t : layer.parameters()) t.set_requires_grad(true);
  return layer;
}

KanNetwork kan_network_init(std::span<const std::size_t> dims, const SplineGrid& grid, std::uint64_t seed) {
  if (dims.size() < 2) throw ConfigError("KAN network needs at least an input and an output width");
  KanNetwork net;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    net.layers.push_back(kan_init(dims[l], dims[l + 1], grid, Rng::derive(seed, l)));
  }
  return net;
}

Tensor kan_layer_forward(const Tensor& h, const KanLayer& layer) {
  if (h.rank() != 2 || h.dim(1) != layer.in_dim) {
    throw ShapeError("kan_layer_forward: expected [batch," + std::to_string(layer.in_dim) + "], got " +
                     shape_str(h.shape()));
  }
  const std::size_t batch = h.dim(0), in = layer.in_dim, out = layer.out_dim;
  const std::size_t nb = layer.grid.basis_count();
  const bool recording = detail::will_record({&h, &layer.base_weight, &layer.spline_weight, &layer.spline_coeffs});

  auto x = h.data();
  std::vector<double> basis(batch * in * nb), deriv(recording ? batch * in * nb : 0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t p = 0; p < in; ++p) {
      const std::size_t off = (b * in + p) * nb;
      bspline_basis_and_derivative(x[b * in + p], layer.grid, std::span(basis).subspan(off, nb),
                                   recording ? std::span(deriv).subspan(off, nb) : std::span<double>{});
    }
  }

  auto bw = layer.base_weight.data(), sw = layer.spline_weight.data(), c = layer.spline_coeffs.data();
  std::vector<double> y(batch * out, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < out; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < in; ++p) {
        const double* cj = c.data() + (j * in + p) * nb;
        const double* bp = basis.data() + (b * in + p) * nb;
        double spline = 0.0;
        for (std::size_t i = 0; i < nb; ++i) spline += cj[i] * bp[i];
        acc += bw[j * in + p] * silu_value(x[b * in + p]) + sw[j * in + p] * spline;
      }
      y[b * out + j] = acc;
    }
  }
  Tensor r(Shape{batch, out}, std::move(y));
  if (!recording) return r;

  ImplPtr hi = h.impl(), bwi = layer.base_weight.impl(), swi = layer.spline_weight.impl(),
          ci = layer.spline_coeffs.impl();
  detail::record(r, "kan_layer", {&h, &layer.base_weight, &layer.spline_weight, &layer.spline_coeffs},
                 [=, basis = std::move(basis), deriv = std::move(deriv)](const std::vector<double>& g) {
                   double* gx = grad_sink(hi);
                   double* gbw = grad_sink(bwi);
                   double* gsw = grad_sink(swi);
                   double* gc = grad_sink(ci);
                   const auto& xv = hi->data;
                   const auto& bwv = bwi->data;
                   const auto& swv = swi->data;
                   const auto& cv = ci->data;
                   for (std::size_t b = 0; b < batch; ++b) {
                     for (std::size_t p = 0; p < in; ++p) {
                       const double xb = xv[b * in + p];
                       const double act = silu_value(xb);
                       const double slope = silu_slope(xb);
                       const double* bp = basis.data() + (b * in + p) * nb;
                       const double* dp = deriv.data() + (b * in + p) * nb;
                       double dx = 0.0;
                       for (std::size_t j = 0; j < out; ++j) {
                         const double gj = g[b * out + j];
                         const std::size_t e = j * in + p;
                         const double* cj = cv.data() + e * nb;
                         double spline = 0.0, spline_slope = 0.0;
                         for (std::size_t i = 0; i < nb; ++i) {
                           spline += cj[i] * bp[i];
                           spline_slope += cj[i] * dp[i];
                         }
                         if (gbw) gbw[e] += gj * act;
                         if (gsw) gsw[e] += gj * spline;
                         if (gc) {
                           const double s = gj * swv[e];
                           for (std::size_t i = 0; i < nb; ++i) gc[e * nb + i] += s * bp[i];
                         }
                         dx += gj * (bwv[e] * slope + swv[e] * spline_slope);
                       }
                       if (gx) gx[b * in + p] += dx;
                     }
                   }
                 });
  return r;
}

Tensor kan_forward(const Tensor& h, const KanNetwork& net) {
  net.validate();
  if (h.rank() != 2 || h.dim(1) != net.in_dim()) {
    throw ShapeError("kan_forward: network expects width " + std::to_string(net.in_dim()) + ", got " +
                     shape_str(h.shape()));
  }
  Tensor x = h;
  for (const auto& layer : net.layers) x = kan_layer_forward(x, layer);
  return x;
}

}  // namespace mpk::kan
