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
#include <limits>

#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace mpk;
using testutil::random_tensor;
using testutil::values;

TEST_CASE("elementwise values") {
  Tensor a(Shape{3}, {-1.0, 0.0, 2.0});
  Tensor b(Shape{3}, {4.0, 5.0, -6.0});
  CHECK(values(add(a, b)) == std::vector<double>{3.0, 5.0, -4.0});
  CHECK(values(sub(a, b)) == std::vector<double>{-5.0, -5.0, 8.0});
  CHECK(values(mul(a, b)) == std::vector<double>{-4.0, 0.0, -12.0});
  CHECK(values(relu(a)) == std::vector<double>{0.0, 0.0, 2.0});
  CHECK(values(clamp(a, -0.5, 1.0)) == std::vector<double>{-0.5, 0.0, 1.0});
  CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  CHECK(silu(Tensor::scalar(2.0)).item() == doctest::Approx(2.0 / (1.0 + std::exp(-2.0))).epsilon(1e-15));
  CHECK_THROWS_AS(add(a, Tensor(Shape{2}, {1.0, 2.0})), ShapeError);
}

TEST_CASE("softmax of equal logits is uniform and shift invariant") {
  for (double alpha : {-50.0, 0.0, 3.5, 700.0}) {
    auto s = softmax(Tensor(Shape{2}, {alpha, alpha}), 0);
    CHECK(s.at(0) == doctest::Approx(0.5));
    CHECK(s.at(1) == doctest::Approx(0.5));
  }
  auto x = random_tensor({4, 3}, 1);
  auto shifted = add(x, Tensor::full({4, 3}, 9.0));
  CHECK(testutil::max_abs_diff(values(softmax(x, 1)), softmax(shifted, 1).data()) < 1e-14);
  auto rows = softmax(x, 1);
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(rows.at(i * 3) + rows.at(i * 3 + 1) + rows.at(i * 3 + 2) == doctest::Approx(1.0).epsilon(1e-14));
  }
}

TEST_CASE("reductions drop axes") {
  auto x = random_tensor({2, 3, 4}, 2);
  CHECK(mean_over(x, {1}).shape() == Shape{2, 4});
  CHECK(max_over(x, {0, 2}).shape() == Shape{3});
  CHECK(mean_over(x, {0, 1, 2}).shape() == Shape{});
  double s = 0.0;
  for (double v : x.data()) s += v;
  CHECK(sum_all(x).item() == doctest::Approx(s).epsilon(1e-14));
  CHECK(mean_all(x).item() == doctest::Approx(s / 24.0).epsilon(1e-14));
  auto m = max_over(x, {1});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t k = 0; k < 4; ++k) {
      double ref = -INFINITY;
      for (std::size_t j = 0; j < 3; ++j) ref = std::max(ref, x.at((i * 3 + j) * 4 + k));
      CHECK(m.at(i * 4 + k) == ref);
    }
}

TEST_CASE("permute, reshape, broadcast, select, concat, slice") {
  auto x = random_tensor({2, 3, 4}, 3);
  auto p = permute_axes(x, {2, 0, 1});
  CHECK(p.shape() == Shape{4, 2, 3});
  CHECK(p.at((3 * 2 + 1) * 3 + 2) == x.at((1 * 3 + 2) * 4 + 3));
  CHECK(values(permute_axes(p, inverse_permutation({2, 0, 1}))) == values(x));
  CHECK_THROWS_AS(reshape(x, {5, 5}), ShapeError);
  auto b = broadcast_to(Tensor(Shape{1, 3}, {1.0, 2.0, 3.0}), {2, 3});
  CHECK(values(b) == std::vector<double>{1, 2, 3, 1, 2, 3});
  CHECK(select(x, 5).shape() == Shape{});
  CHECK(select(x, 5).item() == x.at(5));
  auto c = concat_channels(Tensor(Shape{1, 2}, {1, 2}), Tensor(Shape{2, 2}, {3, 4, 5, 6}));
  CHECK(values(c) == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(values(slice_channels(c, 1, 3)) == std::vector<double>{3, 4, 5, 6});
  Tensor parts[] = {Tensor(Shape{2}, {1, 2}), Tensor(Shape{2}, {3, 4})};
  CHECK(stack(parts).shape() == Shape{2, 2});
}

TEST_CASE("matmul against hand computation") {
  Tensor a(Shape{2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b(Shape{3, 2}, {7, 8, 9, 10, 11, 12});
  CHECK(values(matmul(a, b)) == std::vector<double>{58, 64, 139, 154});
  CHECK_THROWS_AS(matmul(a, a), ShapeError);
}

TEST_CASE("conv3d matches the nested-loop oracle") {
  struct Case {
    std::size_t ci, co, d, h, w, k, s, p;
  };
  const Case cases[] = {{1, 2, 4, 4, 4, 2, 2, 0}, {2, 3, 5, 4, 6, 3, 1, 1}, {3, 2, 3, 3, 3, 1, 1, 0},
                        {2, 2, 6, 5, 4, 3, 2, 1}, {4, 5, 2, 3, 2, 1, 1, 0}};
  std::uint64_t seed = 10;
  for (const auto& c : cases) {
    auto x = random_tensor({c.ci, c.d, c.h, c.w}, seed++);
    auto wt = random_tensor({c.co, c.ci, c.k, c.k, c.k}, seed++);
    auto bias = random_tensor({c.co}, seed++);
    auto ours = conv3d(x, wt, bias, c.s, c.p);
    auto ref = oracle::conv3d(testutil::to_vol(x), values(wt), values(bias), c.co, c.k, c.s, c.p);
    CHECK(ours.shape() == Shape{c.co, ref.d, ref.h, ref.w});
    CHECK(testutil::max_abs_diff(ref.v, ours.data()) < 1e-12);
  }
}

TEST_CASE("conv3d without bias and with mismatched channels") {
  auto x = random_tensor({2, 3, 3, 3}, 20);
  auto wt = random_tensor({1, 2, 3, 3, 3}, 21);
  auto ref = oracle::conv3d(testutil::to_vol(x), values(wt), {}, 1, 3, 1, 1);
  CHECK(testutil::max_abs_diff(ref.v, conv3d(x, wt, Tensor(), 1, 1).data()) < 1e-12);
  CHECK_THROWS_AS(conv3d(x, random_tensor({1, 3, 3, 3, 3}, 22), Tensor(), 1, 1), ShapeError);
}

TEST_CASE("maxpool3d matches the window oracle") {
  auto x = random_tensor({3, 6, 4, 5}, 30);
  auto ours = maxpool3d(x, 2, 2);
  auto ref = oracle::maxpool(testutil::to_vol(x), 2, 2);
  CHECK(ours.shape() == Shape{3, 3, 2, 2});
  CHECK(testutil::max_abs_diff(ref.v, ours.data()) == 0.0);
}

TEST_CASE("sqrt has zero gradient at zero and clamp only passes interior gradients") {
  Tensor x = Tensor(Shape{3}, {0.0, 4.0, 9.0});
  x.set_requires_grad(true);
  {
    Tape tape;
    tape.backward(sum_all(sqrt(x)));
  }
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == doctest::Approx(0.25));
  x.zero_grad();
  {
    Tape tape;
    tape.backward(sum_all(clamp(x, 0.0, 5.0)));
  }
  CHECK(values(Tensor(Shape{3}, {x.grad()[0], x.grad()[1], x.grad()[2]})) == std::vector<double>{0.0, 1.0, 0.0});
}

TEST_CASE("leaf gradients accumulate across backward passes") {
  Tensor x = Tensor::scalar(3.0);
  x.set_requires_grad(true);
  for (int i = 0; i < 2; ++i) {
    Tape tape;
    tape.backward(mul(x, x));
  }
  CHECK(x.grad()[0] == doctest::Approx(12.0));
}

TEST_CASE("no recording without a tape or under NoGradGuard") {
  Tensor x = Tensor::scalar(2.0);
  x.set_requires_grad(true);
  Tensor y = mul(x, x);
  CHECK_FALSE(y.on_tape());
  Tape tape;
  {
    NoGradGuard guard;
    CHECK_FALSE(mul(x, x).on_tape());
  }
  CHECK(mul(x, x).on_tape());
}

TEST_CASE("forward results are finite on finite inputs") {
  auto x = random_tensor({2, 4, 4, 4}, 40, -5.0, 5.0);
  CHECK(all_finite(sigmoid(x).data()));
  CHECK(all_finite(softmax(scale(x, 100.0), 0).data()));
  CHECK(all_finite(log(clamp(sigmoid(x), 1e-12, 1.0)).data()));
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_FALSE(all_finite(std::vector<double>{1.0, nan}));
}

namespace {

GradcheckReport check(const std::string& name, const std::function<Tensor(const std::vector<Tensor>&)>& f,
                      std::vector<Tensor> params) {
  for (auto& p : params) p.set_requires_grad(true);
  GradcheckOptions opt;
  opt.samples = 50;
  return gradcheck(name, [&] { return f(params); }, params, opt);
}

}  // namespace

TEST_CASE("finite-difference gradients of individual ops") {
  auto a = random_tensor({3, 4}, 50);
  auto b = random_tensor({3, 4}, 51);
  auto m = random_tensor({4, 2}, 52);
  auto pos = random_tensor({3, 4}, 53, 0.5, 2.0);
  auto weigh = random_tensor({3, 4}, 54);
  auto dot = [&](const Tensor& t) { return sum_all(mul(t, weigh)); };

  std::vector<GradcheckReport> reports = {
      check("mul", [&](auto& p) { return dot(mul(p[0], p[1])); }, {a, b}),
      check("sigmoid", [&](auto& p) { return dot(sigmoid(p[0])); }, {a}),
      check("silu", [&](auto& p) { return dot(silu(p[0])); }, {a}),
      check("log", [&](auto& p) { return dot(log(p[0])); }, {pos}),
      check("sqrt", [&](auto& p) { return dot(sqrt(p[0])); }, {pos}),
      check("softmax", [&](auto& p) { return dot(softmax(p[0], 1)); }, {a}),
      check("matmul", [&](auto& p) { return sum_all(mul(matmul(p[0], p[1]), random_tensor({3, 2}, 55))); }, {a, m}),
      check("mean_over", [&](auto& p) { return sum_all(mul(mean_over(p[0], {0}), random_tensor({4}, 56))); }, {a}),
      check("max_over", [&](auto& p) { return sum_all(mul(max_over(p[0], {1}), random_tensor({3}, 57))); }, {a}),
      check("permute", [&](auto& p) { return sum_all(mul(permute_axes(p[0], {1, 0}), random_tensor({4, 3}, 58))); },
            {a}),
      check("broadcast",
            [&](auto& p) { return dot(broadcast_to(p[0], {3, 4})); }, {random_tensor({1, 4}, 59)}),
  };
  for (const auto& r : reports) {
    INFO(r.name << " max_rel_error=" << r.max_rel_error);
    CHECK(r.passed());
  }
}

TEST_CASE("conv3d and maxpool gradients") {
  auto x = random_tensor({2, 4, 4, 4}, 60);
  auto wt = random_tensor({3, 2, 3, 3, 3}, 61);
  auto bias = random_tensor({3}, 62);
  auto wout = random_tensor({3, 4, 4, 4}, 63);
  auto r = check("conv3d", [&](auto& p) { return sum_all(mul(conv3d(p[0], p[1], p[2], 1, 1), wout)); }, {x, wt, bias});
  CHECK(r.passed());
  auto wpool = random_tensor({2, 2, 2, 2}, 64);
  auto r2 = check("maxpool3d", [&](auto& p) { return sum_all(mul(maxpool3d(p[0]), wpool)); }, {x});
  CHECK(r2.passed());
}

TEST_CASE("an injected backward fault is caught by the gradient check") {
  auto a = random_tensor({3, 4}, 70);
  auto weigh = random_tensor({3, 4}, 71);
  detail::set_backward_fault("sigmoid", 1.5);
  auto r = check("sigmoid", [&](auto& p) { return sum_all(mul(sigmoid(p[0]), weigh)); }, {a});
  detail::set_backward_fault("", 1.0);
  CHECK_FALSE(r.passed());
  auto ok = check("sigmoid", [&](auto& p) { return sum_all(mul(sigmoid(p[0]), weigh)); }, {a});
  CHECK(ok.passed());
}
