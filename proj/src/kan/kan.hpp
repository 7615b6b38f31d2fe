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

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "core/tensor.hpp"

// Kolmogorov-Arnold layers. Each edge (j <- p) carries
//   phi(x) = base_weight[j,p] * silu(x) + spline_weight[j,p] * sum_i coeffs[j,p,i] * B_i(x)
// and a layer output is the sum of its incoming edge functions.
namespace mpk::kan {

// Uniform knot vector extended by `degree` knots on each side of
// [lo, hi]. Inputs are clamped into [lo, hi] before basis evaluation.
struct SplineGrid {
  double lo = -1.0;
  double hi = 1.0;
  std::size_t grid_size = 8;
  std::size_t degree = 3;

  std::size_t basis_count() const { return grid_size + degree; }
  std::size_t knot_count() const { return grid_size + 2 * degree + 1; }
  std::vector<double> knots() const;
  void validate() const;
};

// Cox-de Boor evaluation of all basis functions at x.
std::vector<double> bspline_basis(double x, const SplineGrid& grid);
// Same, plus d/dx of each basis function. The derivative is zero when x
// lies outside [lo, hi] (the clamp is flat there).
void bspline_basis_and_derivative(double x, const SplineGrid& grid, std::span<double> basis,
                                  std::span<double> derivative);

struct KanLayer {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  SplineGrid grid;
  Tensor base_weight;    // [out, in]
  Tensor spline_weight;  // [out, in]
  Tensor spline_coeffs;  // [out, in, basis_count]

  std::vector<Tensor> parameters() const { return {base_weight, spline_weight, spline_coeffs}; }
};

struct KanNetwork {
  std::vector<KanLayer> layers;

  std::size_t in_dim() const;
  std::size_t out_dim() const;
  std::vector<Tensor> parameters() const;
  void validate() const;
};

// base_weight ~ U(+-sqrt(6/in)), spline_weight = 1,
// coeffs ~ U(+-0.1/basis_count). Parameters are created with requires_grad.
KanLayer kan_init(std::size_t in_dim, std::size_t out_dim, const SplineGrid& grid, std::uint64_t seed);
// dims = {d0, d1, ..., dL}; one layer per consecutive pair.
KanNetwork kan_network_init(std::span<const std::size_t> dims, const SplineGrid& grid, std::uint64_t seed);

// h [batch, in_dim] -> [batch, out_dim]
Tensor kan_layer_forward(const Tensor& h, const KanLayer& layer);
Tensor kan_forward(const Tensor& h, const KanNetwork& net);

}  // namespace mpk::kan
