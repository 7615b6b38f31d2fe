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
#include "core/ops.hpp"
#include "doctest.h"
#include "interpret/gradcam.hpp"
#include "interpret/regions.hpp"
#include "model/model.hpp"
#include "test_util.hpp"

using namespace mpk;
using namespace mpk::interpret;
using testutil::random_tensor;
using testutil::values;

namespace {

model::ModelConfig small_config() {
  model::ModelConfig cfg;
  cfg.attention_hidden = 4;
  cfg.head_hidden = 8;
  return cfg;
}

// Score as a function of the per-branch activations, recomputed from the
// branch traces downstream of the chosen tap point.
double score_from(const std::vector<Tensor>& taps, const model::ModelParams& params, bool post_attention,
                  int target) {
  NoGradGuard guard;
  std::vector<Tensor> maps;
  for (std::size_t b = 0; b < taps.size(); ++b) {
    if (post_attention) {
      maps.push_back(taps[b]);
      continue;
    }
    Tensor r = model::realign(taps[b], params.branches[b].plane);
    maps.push_back(params.config.use_attention ? model::kansc_forward(r, params.branches[b].attention).features : r);
  }
  Tensor fused = model::fuse(maps);
  const std::size_t c = fused.dim(0);
  Tensor flat = reshape(fused, {c, fused.numel() / c});
  return model::head_forward(flat, params.head).global_logits.data()[static_cast<std::size_t>(target)];
}

// Channel weights by central differences along the all-ones direction of
// each channel, which equals the spatial mean of the gradient times n.
std::vector<std::vector<double>> fd_channel_weights(const std::vector<Tensor>& taps, const model::ModelParams& params,
                                                    bool post_attention, int target) {
  const double h = 1e-5;
  std::vector<std::vector<double>> weights;
  for (std::size_t b = 0; b < taps.size(); ++b) {
    const std::size_t c = taps[b].dim(0), n = taps[b].numel() / c;
    std::vector<double> w(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
      auto shifted = [&](double eps) {
        std::vector<Tensor> t;
        for (const auto& x : taps) t.push_back(x.detach());
        auto v = values(taps[b]);
        for (std::size_t i = 0; i < n; ++i) v[ch * n + i] += eps;
        t[b] = Tensor(taps[b].shape(), std::move(v));
        return score_from(t, params, post_attention, target);
      };
      w[ch] = (shifted(h) - shifted(-h)) / (2.0 * h) / static_cast<double>(n);
    }
    weights.push_back(std::move(w));
  }
  return weights;
}

// relu(sum_c w_c A_c) evaluated on axial-frame maps, upsampled by index
// division and averaged over branches.
std::vector<double> oracle_raw_cam(const std::vector<Tensor>& axial_maps,
                                   const std::vector<std::vector<double>>& weights,
                                   const std::array<std::size_t, 3>& dims) {
  std::vector<double> out(dims[0] * dims[1] * dims[2], 0.0);
  for (std::size_t b = 0; b < axial_maps.size(); ++b) {
    const auto vol = testutil::to_vol(axial_maps[b]);
    const std::size_t fd = dims[0] / vol.d, fh = dims[1] / vol.h, fw = dims[2] / vol.w;
    std::size_t i = 0;
    for (std::size_t z = 0; z < dims[0]; ++z) {
      for (std::size_t y = 0; y < dims[1]; ++y) {
        for (std::size_t x = 0; x < dims[2]; ++x, ++i) {
          double s = 0.0;
          for (std::size_t ch = 0; ch < vol.c; ++ch) s += weights[b][ch] * vol.at(ch, z / fd, y / fh, x / fw);
          out[i] += std::max(s, 0.0) / static_cast<double>(axial_maps.size());
        }
      }
    }
  }
  return out;
}

Tensor test_volume(std::array<std::size_t, 3> dims, std::uint64_t seed) {
  return random_tensor({1, dims[0], dims[1], dims[2]}, seed, 0.0, 1.0);
}

}  // namespace

TEST_CASE("gradcam matches a finite-difference oracle on backbone maps") {
  const auto params = model::model_init(small_config(), 5);
  const std::array<std::size_t, 3> dims = {64, 32, 64};
  const Tensor vol = test_volume(dims, 9);
  for (int target : {0, 1}) {
    auto res = gradcam(params, vol, target);
    REQUIRE(res.plane_cams.size() == 3);
    model::ModelOutput out;
    {
      NoGradGuard guard;
      out = model::model_forward(vol, params);
    }
    std::vector<Tensor> taps, axial;
    for (const auto& b : out.branches) {
      taps.push_back(b.stage5);
      axial.push_back(b.realigned);
    }
    const auto w = fd_channel_weights(taps, params, false, target);
    const auto expect = oracle_raw_cam(axial, w, dims);
    double scale = 0.0;
    for (double v : expect) scale = std::max(scale, std::abs(v));
    CHECK(testutil::max_abs_diff(expect, res.raw) <= 1e-6 * std::max(1.0, scale));
    CHECK(res.dims == dims);
  }
}

TEST_CASE("gradcam matches the oracle on attended maps") {
  const auto params = model::model_init(small_config(), 6);
  const std::array<std::size_t, 3> dims = {32, 64, 64};
  const Tensor vol = test_volume(dims, 10);
  GradcamOptions opts;
  opts.post_attention = true;
  auto res = gradcam(params, vol, 1, opts);
  model::ModelOutput out;
  {
    NoGradGuard guard;
    out = model::model_forward(vol, params);
  }
  std::vector<Tensor> taps;
  for (const auto& b : out.branches) taps.push_back(b.attended);
  const auto w = fd_channel_weights(taps, params, true, 1);
  const auto expect = oracle_raw_cam(taps, w, dims);
  double scale = 0.0;
  for (double v : expect) scale = std::max(scale, std::abs(v));
  CHECK(testutil::max_abs_diff(expect, res.raw) <= 1e-6 * std::max(1.0, scale));
}

TEST_CASE("gradcam output is normalized and non-negative") {
  const auto params = model::model_init(small_config(), 7);
  auto res = gradcam(params, test_volume({64, 64, 64}, 3), 1);
  REQUIRE(res.cam.size() == 64u * 64u * 64u);
  double lo = 1e9, hi = -1e9;
  for (double v : res.raw) CHECK(v >= 0.0);
  for (double v : res.cam) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo >= 0.0);
  CHECK(hi <= 1.0);
  if (!res.zero) CHECK(hi == doctest::Approx(1.0));
  for (auto& p : params.parameters()) CHECK_FALSE(p.has_grad());
}

TEST_CASE("scaling the classifier scales the raw map and keeps the normalized map") {
  auto a = model::model_init(small_config(), 8);
  auto b = model::model_init(small_config(), 8);
  auto psi = b.head.psi.mutable_data();
  for (auto& v : psi) v *= 2.5;
  const Tensor vol = test_volume({64, 64, 64}, 4);
  auto ra = gradcam(a, vol, 1), rb = gradcam(b, vol, 1);
  std::vector<double> scaled(ra.raw);
  for (auto& v : scaled) v *= 2.5;
  CHECK(testutil::max_abs_diff(scaled, rb.raw) <= 1e-9);
  CHECK(testutil::max_abs_diff(ra.cam, rb.cam) <= 1e-9);
}

TEST_CASE("a classifier with no weights yields a zero map") {
  auto p = model::model_init(small_config(), 9);
  for (auto& v : p.head.psi.mutable_data()) v = 0.0;
  auto res = gradcam(p, test_volume({64, 64, 64}, 5), 0);
  CHECK(res.zero);
  for (double v : res.cam) CHECK(v == 0.0);
}

TEST_CASE("gradcam rejects bad targets and shapes") {
  const auto params = model::model_init(small_config(), 1);
  CHECK_THROWS_AS(gradcam(params, test_volume({64, 64, 64}, 1), 2), DataError);
  CHECK_THROWS_AS(gradcam(params, test_volume({64, 64, 60}, 1), 0), ConfigError);
}

TEST_CASE("cam from activation weights channels by mean gradient") {
  Tensor act(Shape{2, 1, 1, 3}, {1, 2, 3, -1, 0, 4});
  const std::vector<double> grad = {1, 1, 1, 0.5, -0.5, 3};  // means 1 and 1
  auto cam = cam_from_activation(act, grad);
  REQUIRE(cam.size() == 3);
  CHECK(cam[0] == doctest::Approx(0.0));
  CHECK(cam[1] == doctest::Approx(2.0));
  CHECK(cam[2] == doctest::Approx(7.0));
  CHECK_THROWS_AS(cam_from_activation(act, std::vector<double>(5)), ShapeError);
}

TEST_CASE("normalize cam") {
  bool zero = false;
  auto a = normalize_cam(std::vector<double>{0, 2, 4}, &zero);
  CHECK_FALSE(zero);
  CHECK(a == std::vector<double>{0, 0.5, 1});
  auto b = normalize_cam(std::vector<double>{0, 0, 0}, &zero);
  CHECK(zero);
  CHECK(b == std::vector<double>{0, 0, 0});
  auto c = normalize_cam(std::vector<double>{3, 3}, &zero);
  CHECK_FALSE(zero);
  CHECK(c == std::vector<double>{1, 1});
}

TEST_CASE("nearest upsampling repeats cells") {
  const std::vector<double> g = {1, 2, 3, 4};
  auto up = upsample_nearest(g, {1, 2, 2}, {1, 2, 3});
  REQUIRE(up.size() == 24);
  CHECK(up[0] == 1);
  CHECK(up[2] == 1);
  CHECK(up[3] == 2);
  CHECK(up[6] == 1);
  CHECK(up[12] == 3);
  CHECK(up[23] == 4);
}

TEST_CASE("realign grid inverts reorientation") {
  const Tensor t = random_tensor({1, 2, 3, 4}, 2);
  for (auto p : model::kAllPlanes) {
    Tensor r;
    {
      NoGradGuard guard;
      r = model::reorient(t, p);
    }
    std::array<std::size_t, 3> od{};
    auto back = realign_grid(values(r), {r.dim(1), r.dim(2), r.dim(3)}, p, od);
    CHECK(od == std::array<std::size_t, 3>{2, 3, 4});
    CHECK(back == values(t));
  }
}

namespace {

Atlas two_region_atlas() {
  Atlas a;
  a.dims = {1, 2, 4};
  a.labels = {1, 1, 2, 2, 1, 1, 2, 0};
  a.names = {{1, "left"}, {2, "right"}};
  return a;
}

}  // namespace

TEST_CASE("region aggregate averages within labels") {
  const auto atlas = two_region_atlas();
  const std::vector<double> cam = {1, 1, 0, 0, 1, 1, 0, 1};
  auto s = region_aggregate(cam, atlas.dims, atlas);
  REQUIRE(s.size() == 2);
  CHECK(s[1] == doctest::Approx(1.0));
  CHECK(s[2] == doctest::Approx(0.0));
  CHECK_THROWS_AS(region_aggregate(cam, {1, 4, 2}, atlas), ShapeError);
}

TEST_CASE("region aggregate is invariant to relabeling") {
  auto atlas = two_region_atlas();
  const std::vector<double> cam = {0.2, 0.4, 0.9, 0.7, 0.1, 0.3, 0.5, 1.0};
  auto s = region_aggregate(cam, atlas.dims, atlas);
  Atlas relabeled = atlas;
  for (auto& l : relabeled.labels) l = l == 1 ? 7 : l == 2 ? 3 : 0;
  auto r = region_aggregate(cam, relabeled.dims, relabeled);
  CHECK(r.at(7) == doctest::Approx(s.at(1)));
  CHECK(r.at(3) == doctest::Approx(s.at(2)));
}

TEST_CASE("top regions sort by score then region") {
  const RegionScores s = {{4, 0.5}, {2, 0.9}, {3, 0.5}, {1, 0.1}};
  auto t = top_regions(s, 3);
  REQUIRE(t.size() == 3);
  CHECK(t[0].first == 2);
  CHECK(t[1].first == 3);
  CHECK(t[2].first == 4);
  CHECK(top_regions(s, 100).size() == 4);
  CHECK(top_regions(s, 0).empty());
}

TEST_CASE("pearson matches the oracle") {
  const std::vector<double> x = {1, 2, 3, 4, 5.5}, y = {2, 1, 4, 3, 7};
  CHECK(*pearson(x, y) == doctest::Approx(oracle::pearson(x, y)).epsilon(1e-12));
  CHECK(*pearson(x, x) == doctest::Approx(1.0));
  const std::vector<double> flat = {2, 2, 2, 2, 2};
  CHECK_FALSE(pearson(x, flat).has_value());
  CHECK_THROWS_AS(pearson(x, std::vector<double>{1, 2}), ShapeError);
}

TEST_CASE("region correlation is symmetric with unit diagonal") {
  std::vector<RegionScores> subj = {{{1, 0.1}, {2, 0.4}, {3, 0.5}},
                                    {{1, 0.3}, {2, 0.1}, {3, 0.5}},
                                    {{1, 0.8}, {2, 0.2}, {3, 0.5}},
                                    {{1, 0.5}, {2, 0.9}, {3, 0.5}}};
  const std::vector<int> regions = {1, 2, 3};
  auto m = region_correlation(subj, regions);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(*m[i][i] == doctest::Approx(1.0));
    for (std::size_t j = 0; j < 2; ++j) CHECK(*m[i][j] == doctest::Approx(*m[j][i]));
  }
  CHECK_FALSE(m[2][2].has_value());
  CHECK_FALSE(m[0][2].has_value());
  auto tsv = correlation_tsv(m, regions);
  CHECK(tsv.find("NA") != std::string::npos);
  CHECK_THROWS_AS(region_correlation(std::span(subj).first(2), regions), DataError);
}

TEST_CASE("atlas round trip keeps labels and names") {
  testutil::TempDir dir("atlas");
  auto a = octant_atlas({4, 4, 4});
  REQUIRE(a.labels.size() == 64);
  CHECK(a.labels.front() == 1);
  CHECK(a.labels.back() == 8);
  a.names[3] = "third";
  save_atlas(dir / "a.vox", a);
  auto b = load_atlas(dir / "a.vox");
  CHECK(b.dims == a.dims);
  CHECK(b.labels == a.labels);
  CHECK(b.name_of(3) == "third");
  auto tsv = region_scores_tsv({{3, 0.25}}, b);
  CHECK(tsv.find("third") != std::string::npos);
}
