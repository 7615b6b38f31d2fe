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

#include <cmath>

#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "doctest.h"
#include "kan/kan.hpp"
#include "test_util.hpp"

using namespace mpk;
using namespace mpk::kan;

TEST_CASE("knot vector is uniform and extended by degree on each side") {
  SplineGrid g;
  const auto t = g.knots();
  REQUIRE(t.size() == 15);
  CHECK(t.front() == doctest::Approx(-1.75));
  CHECK(t[3] == doctest::Approx(-1.0));
  CHECK(t[11] == doctest::Approx(1.0));
  CHECK(g.basis_count() == 11);
}

TEST_CASE("partition of unity, non-negativity and local support") {
  for (std::size_t degree : {1u, 2u, 3u, 4u}) {
    SplineGrid g{-1.0, 1.0, 8, degree};
    Rng rng(degree);
    double worst = 0.0;
    for (int s = 0; s < 1000; ++s) {
      const double x = rng.uniform(-1.0, 1.0);
      const auto b = bspline_basis(x, g);
      double sum = 0.0;
      std::size_t nonzero = 0;
      for (double v : b) {
        CHECK(v >= 0.0);
        sum += v;
        nonzero += v != 0.0;
      }
      CHECK(nonzero <= degree + 1);
      worst = std::max(worst, std::abs(sum - 1.0));
    }
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("agreement with the recursive Cox-de Boor oracle") {
  for (std::size_t degree : {0u, 1u, 2u, 3u}) {
    for (std::size_t grid_size : {1u, 5u, 8u}) {
      SplineGrid g{-2.0, 3.0, grid_size, degree};
      const auto t = oracle::uniform_knots(-2.0, 3.0, grid_size, degree);
      Rng rng(grid_size * 10 + degree);
      double worst = 0.0;
      for (int s = 0; s < 200; ++s) {
        const double x = rng.uniform(-2.0, 3.0);
        const auto b = bspline_basis(x, g);
        for (std::size_t i = 0; i < b.size(); ++i) worst = std::max(worst, std::abs(b[i] - oracle::cox_de_boor(i, degree, x, t)));
      }
      CHECK(worst < 1e-12);
    }
  }
}

TEST_CASE("degree 0 reduces to the interval indicator") {
  SplineGrid g{0.0, 4.0, 4, 0};
  const auto b = bspline_basis(2.5, g);
  CHECK(b == std::vector<double>{0.0, 0.0, 1.0, 0.0});
}

TEST_CASE("inputs outside the domain are clamped and have zero derivative") {
  SplineGrid g;
  std::vector<double> b(g.basis_count()), d(g.basis_count()), b_edge(g.basis_count()), d_edge(g.basis_count());
  bspline_basis_and_derivative(5.0, g, b, d);
  bspline_basis_and_derivative(1.0, g, b_edge, d_edge);
  CHECK(b == b_edge);
  for (double v : d) CHECK(v == 0.0);
  CHECK_THROWS_AS(bspline_basis(std::nan(""), g), NumericError);
}

TEST_CASE("basis derivative matches central differences inside the domain") {
  SplineGrid g;
  std::vector<double> b(g.basis_count()), d(g.basis_count());
  for (double x : {-0.93, -0.41, 0.07, 0.66}) {
    bspline_basis_and_derivative(x, g, b, d);
    const auto up = bspline_basis(x + 1e-6, g);
    const auto down = bspline_basis(x - 1e-6, g);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(d[i] == doctest::Approx((up[i] - down[i]) / 2e-6).epsilon(1e-6));
  }
}

TEST_CASE("kan_init bounds and determinism") {
  SplineGrid g;
  auto a = kan_init(16, 4, g, 7);
  auto b = kan_init(16, 4, g, 7);
  auto c = kan_init(16, 4, g, 8);
  CHECK(testutil::values(a.base_weight) == testutil::values(b.base_weight));
  CHECK(testutil::values(a.spline_coeffs) == testutil::values(b.spline_coeffs));
  CHECK(testutil::values(a.base_weight) != testutil::values(c.base_weight));
  const double bb = std::sqrt(6.0 / 16.0), cb = 0.1 / 11.0;
  for (double v : a.base_weight.data()) CHECK(std::abs(v) <= bb);
  for (double v : a.spline_weight.data()) CHECK(v == 1.0);
  for (double v : a.spline_coeffs.data()) CHECK(std::abs(v) <= cb);
  CHECK_THROWS_AS(kan_init(0, 4, g, 1), ConfigError);
}

TEST_CASE("initialized 1->1 layer output stays within |silu| range plus 0.1") {
  SplineGrid g;
  auto layer = kan_init(1, 1, g, 3);
  double silu_max = 0.0;
  for (int i = 0; i <= 1000; ++i) silu_max = std::max(silu_max, std::abs(oracle::silu(-1.0 + 2.0 * i / 1000.0)));
  const double bw = std::abs(layer.base_weight.at(0));
  for (int i = 0; i <= 1000; ++i) {
    const double x = -1.0 + 2.0 * i / 1000.0;
    const double y = kan_layer_forward(Tensor(Shape{1, 1}, {x}), layer).item();
    CHECK(std::abs(y) <= bw * silu_max + 0.1);
  }
}

TEST_CASE("single identity-configured layer computes silu") {
  SplineGrid g;
  auto layer = kan_init(1, 1, g, 1);
  layer.base_weight.mutable_data()[0] = 1.0;
  for (auto& c : layer.spline_coeffs.mutable_data()) c = 0.0;
  for (double x : {-3.0, -0.2, 0.0, 0.7, 4.0}) {
    CHECK(kan_layer_forward(Tensor(Shape{1, 1}, {x}), layer).item() == doctest::Approx(oracle::silu(x)).epsilon(1e-15));
  }
}

TEST_CASE("kan_layer_forward matches the scalar oracle") {
  SplineGrid g{-1.0, 1.0, 5, 3};
  auto layer = kan_init(6, 3, g, 11);
  // Non-trivial spline weights so every term matters.
  Rng rng(12);
  for (auto& v : layer.spline_weight.mutable_data()) v = rng.uniform(0.5, 1.5);
  for (auto& v : layer.spline_coeffs.mutable_data()) v = rng.uniform(-1.0, 1.0);
  oracle::KanLayer ref{6, 3, 5, 3, -1.0, 1.0, testutil::values(layer.base_weight), testutil::values(layer.spline_weight),
                       testutil::values(layer.spline_coeffs)};
  auto x = testutil::random_tensor({4, 6}, 13, -1.5, 1.5);
  auto y = kan_layer_forward(x, layer);
  REQUIRE(y.shape() == Shape{4, 3});
  for (std::size_t b = 0; b < 4; ++b) {
    std::vector<double> row(x.data().begin() + b * 6, x.data().begin() + (b + 1) * 6);
    const auto r = oracle::kan_layer(ref, row);
    for (std::size_t j = 0; j < 3; ++j) CHECK(y.at(b * 3 + j) == doctest::Approx(r[j]).epsilon(1e-12));
  }
}

TEST_CASE("network widths C -> 32 -> C and mismatch errors") {
  SplineGrid g;
  const std::size_t dims[] = {256, 32, 256};
  auto net = kan_network_init(dims, g, 5);
  CHECK(net.layers.size() == 2);
  CHECK(net.in_dim() == 256);
  CHECK(net.out_dim() == 256);
  CHECK(kan_forward(testutil::random_tensor({1, 256}, 6), net).shape() == Shape{1, 256});
  CHECK_THROWS_AS(kan_forward(testutil::random_tensor({1, 255}, 6), net), ShapeError);
  net.layers[1].in_dim = 31;
  CHECK_THROWS_AS(net.validate(), ConfigError);
}

TEST_CASE("KAN network gradient check") {
  SplineGrid g;
  const std::size_t dims[] = {5, 4, 3};
  auto net = kan_network_init(dims, g, 21);
  auto x = testutil::random_tensor({2, 5}, 22, -1.2, 1.2);
  x.set_requires_grad(true);
  auto weigh = testutil::random_tensor({2, 3}, 23);
  auto params = net.parameters();
  params.push_back(x);
  auto r = gradcheck("kan_network", [&] { return sum_all(mul(kan_forward(x, net), weigh)); }, params);
  INFO("max_rel_error=" << r.max_rel_error);
  CHECK(r.passed());
}
