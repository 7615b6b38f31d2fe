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

#include <fstream>

#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/ops.hpp"
#include "doctest.h"
#include "model/attention.hpp"
#include "model/backbone.hpp"
#include "model/checkpoint.hpp"
#include "model/fusion.hpp"
#include "model/model.hpp"
#include "test_util.hpp"

using namespace mpk;
using namespace mpk::model;
using testutil::random_tensor;
using testutil::values;

namespace {

// Closed-form parameter count of the backbone from its layer list.
std::size_t conv_params(std::size_t ci, std::size_t co, std::size_t k) { return co * ci * k * k * k + co; }

std::size_t backbone_count_by_hand() {
  std::size_t n = conv_params(1, 16, 2);
  const std::size_t widths[] = {16, 32, 64, 128};
  const std::size_t kernels[] = {3, 3, 3, 1};
  for (int s = 0; s < 4; ++s) n += 2 * conv_params(widths[s], widths[s], kernels[s]);
  return n + 2 * conv_params(256, 256, 1);
}

}  // namespace

TEST_CASE("backbone parameter count matches the layer list") {
  auto p = backbone_init(1);
  CHECK(p.parameter_count() == backbone_count_by_hand());
  CHECK(p.parameter_count() == 455280);
  auto named = p.named_parameters();
  CHECK(named.front().first == "stem.weight");
}

TEST_CASE("backbone init is deterministic per seed") {
  auto a = backbone_init(3), b = backbone_init(3), c = backbone_init(4);
  CHECK(values(a.blocks[2].conv_a.weight) == values(b.blocks[2].conv_a.weight));
  CHECK(values(a.blocks[2].conv_a.weight) != values(c.blocks[2].conv_a.weight));
  for (double v : a.stem.weight.data()) CHECK(std::abs(v) <= 1.0 / std::sqrt(8.0));
}

TEST_CASE("stage channels and spatial dims at 32^3 and 64^3") {
  auto p = backbone_init(2);
  NoGradGuard no_grad;
  auto trace = backbone_forward(random_tensor({1, 32, 64, 32}, 5, 0.0, 1.0), p);
  for (std::size_t s = 0; s < 5; ++s) {
    const std::size_t f = std::size_t{2} << s;
    CHECK(trace.stages[s].shape() == Shape{kStageChannels[s], 32 / f, 64 / f, 32 / f});
  }
  auto out = backbone_forward(random_tensor({1, 64, 64, 64}, 6, 0.0, 1.0), p).output();
  CHECK(out.shape() == Shape{256, 2, 2, 2});
  CHECK(all_finite(out.data()));
}

TEST_CASE("zero input with zero biases gives zero output") {
  auto p = backbone_init(9);
  for (auto& [name, t] : p.named_parameters()) {
    if (name.find("bias") != std::string::npos) {
      for (auto& v : t.mutable_data()) v = 0.0;
    }
  }
  NoGradGuard no_grad;
  auto out = backbone_forward(Tensor::zeros({1, 32, 32, 32}), p).output();
  for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("indivisible input dims name the axis") {
  auto p = backbone_init(1);
  try {
    check_backbone_input({1, 32, 48, 32});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("H") != std::string::npos);
  }
  CHECK_THROWS_AS(backbone_forward(random_tensor({2, 32, 32, 32}, 1), p), ShapeError);
}

TEST_CASE("plane permutations and round trips") {
  CHECK(plane_permutation(Plane::kAxial) == std::array<std::size_t, 3>{0, 1, 2});
  CHECK(plane_permutation(Plane::kCoronal) == std::array<std::size_t, 3>{1, 0, 2});
  CHECK(plane_permutation(Plane::kSagittal) == std::array<std::size_t, 3>{2, 1, 0});
  auto x = random_tensor({2, 3, 4, 5}, 11);
  auto cor = reorient(x, Plane::kCoronal);
  CHECK(cor.shape() == Shape{2, 4, 3, 5});
  // cor[c, y, z, w] == x[c, z, y, w]
  CHECK(cor.at(((1 * 4 + 2) * 3 + 1) * 5 + 4) == x.at(((1 * 3 + 1) * 4 + 2) * 5 + 4));
  auto sag = reorient(x, Plane::kSagittal);
  CHECK(sag.shape() == Shape{2, 5, 4, 3});
  for (Plane p : kAllPlanes) CHECK(values(realign(reorient(x, p), p)) == values(x));
}

TEST_CASE("plane list parsing") {
  CHECK(parse_planes("sagittal,axial") == std::vector<Plane>{Plane::kAxial, Plane::kSagittal});
  CHECK(planes_str(kAllPlanes) == "axial,coronal,sagittal");
  CHECK_THROWS_AS(parse_planes("axial,axial"), ConfigError);
  CHECK_THROWS_AS(parse_planes("oblique"), ConfigError);
  CHECK_THROWS_AS(parse_planes(""), ConfigError);
}

namespace {

struct AttentionCase {
  AttentionVariant variant;
  std::uint64_t seed;
};

std::vector<double> mlp_oracle(const ChannelMlp& m, std::size_t c, std::size_t h, const std::vector<double>& x) {
  auto w1 = values(m.w1), b1 = values(m.b1), w2 = values(m.w2), b2 = values(m.b2);
  std::vector<double> hidden(h), out(c);
  for (std::size_t j = 0; j < h; ++j) {
    double s = b1[j];
    for (std::size_t i = 0; i < c; ++i) s += x[i] * w1[i * h + j];
    hidden[j] = std::max(0.0, s);
  }
  for (std::size_t k = 0; k < c; ++k) {
    double s = b2[k];
    for (std::size_t j = 0; j < h; ++j) s += hidden[j] * w2[j * c + k];
    out[k] = s;
  }
  return out;
}

oracle::KanLayer kan_oracle(const kan::KanLayer& l) {
  return {l.in_dim, l.out_dim, l.grid.grid_size, l.grid.degree, l.grid.lo, l.grid.hi,
          values(l.base_weight), values(l.spline_weight), values(l.spline_coeffs)};
}

}  // namespace

TEST_CASE("KANSC matches the scalar spatial-then-channel oracle for every variant") {
  const std::size_t C = 6, H = 3;
  for (auto variant : {AttentionVariant::kAvgKan, AttentionVariant::kAvgMlp, AttentionVariant::kMaxAvgKan,
                       AttentionVariant::kMaxAvgMlp}) {
    CAPTURE(attention_variant_name(variant));
    KanscOptions opt;
    opt.channels = C;
    opt.hidden = H;
    opt.variant = variant;
    auto p = kansc_init(opt, 31);
    // Larger spline coefficients so the spline term is visible.
    for (auto& l : p.kan.layers) {
      Rng rng(l.in_dim);
      for (auto& v : l.spline_coeffs.mutable_data()) v = rng.uniform(-0.5, 0.5);
    }
    auto f = relu(random_tensor({C, 3, 2, 4}, 32, -0.5, 1.5));
    auto res = kansc_forward(f, p);

    oracle::Vol smap;
    auto after_spatial =
        oracle::spatial_attention(testutil::to_vol(f), values(p.spatial.weight), p.spatial.bias.at(0), &smap);
    std::vector<double> cmap;
    oracle::Vol expect;
    if (uses_kan(variant)) {
      auto l0 = kan_oracle(p.kan.layers[0]), l1 = kan_oracle(p.kan.layers[1]);
      expect = oracle::channel_attention(after_spatial, uses_max(variant),
                                         [&](const std::vector<double>& v) { return oracle::kan_layer(l1, oracle::kan_layer(l0, v)); },
                                         &cmap);
    } else {
      expect = oracle::channel_attention(after_spatial, uses_max(variant),
                                         [&](const std::vector<double>& v) { return mlp_oracle(p.mlp, C, H, v); }, &cmap);
    }
    CHECK(testutil::max_abs_diff(expect.v, res.features.data()) < 1e-12);
    CHECK(testutil::max_abs_diff(smap.v, res.spatial_map.data()) < 1e-12);
    CHECK(testutil::max_abs_diff(cmap, res.channel_map.data()) < 1e-12);
    for (double v : res.spatial_map.data()) CHECK((v > 0.0 && v < 1.0));
    for (double v : res.channel_map.data()) CHECK((v > 0.0 && v < 1.0));
  }
}

TEST_CASE("KANSC rejects a channel mismatch and unknown variants") {
  KanscOptions opt;
  opt.channels = 8;
  opt.hidden = 4;
  auto p = kansc_init(opt, 1);
  CHECK_THROWS_AS(kansc_forward(random_tensor({7, 2, 2, 2}, 1), p), ConfigError);
  CHECK_THROWS_AS(parse_attention_variant("avg_transformer"), ConfigError);
  CHECK(parse_attention_variant("maxavg_kan") == AttentionVariant::kMaxAvgKan);
}

TEST_CASE("KANSC gradient check (default variant)") {
  KanscOptions opt;
  opt.channels = 5;
  opt.hidden = 3;
  auto p = kansc_init(opt, 41);
  auto f = random_tensor({5, 2, 3, 2}, 42, 0.0, 1.0);
  f.set_requires_grad(true);
  auto weigh = random_tensor({5, 2, 3, 2}, 43);
  std::vector<Tensor> params;
  for (auto& [n, t] : p.named_parameters()) params.push_back(t);
  params.push_back(f);
  GradcheckOptions go;
  go.samples = 50;
  auto r = gradcheck("kansc", [&] { return sum_all(mul(kansc_forward(f, p).features, weigh)); }, params, go);
  INFO("max_rel_error=" << r.max_rel_error);
  CHECK(r.passed());
}

TEST_CASE("head matches the scalar oracle and weights stay in (0,1)") {
  const std::size_t C = 7, N = 5, d = 4;
  auto hp = head_init(C, d, 51);
  auto F = random_tensor({C, N}, 52, 0.0, 2.0);
  auto out = head_forward(F, hp);
  auto ref = oracle::head(values(F), C, N, values(hp.w), values(hp.v), d, values(hp.psi));
  CHECK(out.patch_weights.shape() == Shape{N});
  CHECK(out.patch_logits.shape() == Shape{N, 2});
  CHECK(out.global_logits.shape() == Shape{2});
  CHECK(testutil::max_abs_diff(ref.weights, out.patch_weights.data()) < 1e-12);
  for (std::size_t i = 0; i < N; ++i) {
    CHECK(out.patch_logits.at(2 * i) == doctest::Approx(ref.patch0[i]).epsilon(1e-12));
    CHECK(out.patch_logits.at(2 * i + 1) == doctest::Approx(ref.patch1[i]).epsilon(1e-12));
    CHECK((out.patch_weights.at(i) > 0.0 && out.patch_weights.at(i) < 1.0));
  }
  CHECK(out.global_logits.at(0) == doctest::Approx(ref.g0).epsilon(1e-12));
  CHECK(out.global_logits.at(1) == doctest::Approx(ref.g1).epsilon(1e-12));
}

TEST_CASE("fuse sums maps and rejects shape mismatches") {
  Tensor parts[] = {Tensor(Shape{2}, {1, 2}), Tensor(Shape{2}, {10, 20}), Tensor(Shape{2}, {100, 200})};
  CHECK(values(fuse(parts)) == std::vector<double>{111, 222});
  Tensor bad[] = {Tensor(Shape{2}, {1, 2}), Tensor(Shape{3}, {1, 2, 3})};
  CHECK_THROWS_AS(fuse(bad), ShapeError);
}

TEST_CASE("model forward shapes and plane subsets") {
  NoGradGuard no_grad;
  auto vol = random_tensor({1, 64, 64, 64}, 61, 0.0, 1.0);
  ModelConfig cfg;
  auto p = model_init(cfg, 1);
  auto out = model_forward(vol, p);
  CHECK(out.branches.size() == 3);
  for (const auto& b : out.branches) CHECK(b.attended.shape() == Shape{256, 2, 2, 2});
  CHECK(out.head.f_total.shape() == Shape{256, 8});
  CHECK(out.head.patch_weights.shape() == Shape{8});
  const double prob = positive_probability(out);
  CHECK((prob > 0.0 && prob < 1.0));

  cfg.planes = {Plane::kAxial};
  cfg.use_attention = false;
  auto small = model_init(cfg, 1);
  CHECK(small.branches.size() == 1);
  CHECK(small.parameter_count() == 455280 + 64 * 256 + 64 + 256 * 2);
  auto o2 = model_forward(random_tensor({1, 32, 64, 32}, 62), small);
  CHECK(o2.head.f_total.shape() == Shape{256, 2});
}

TEST_CASE("checkpoint round trip is exact") {
  testutil::TempDir dir("ckpt");
  ModelConfig cfg;
  cfg.planes = {Plane::kAxial, Plane::kSagittal};
  auto p = model_init(cfg, 5);
  save_checkpoint(dir / "m.mpkc", p);
  auto q = load_checkpoint(dir / "m.mpkc", cfg);
  auto a = p.named_parameters(), b = q.named_parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].first == b[i].first);
    CHECK(values(a[i].second) == values(b[i].second));
  }
}

TEST_CASE("checkpoint errors") {
  testutil::TempDir dir("ckpt_err");
  ModelConfig cfg;
  cfg.planes = {Plane::kAxial};
  auto p = model_init(cfg, 5);
  save_checkpoint(dir / "m.mpkc", p);

  ModelConfig other = cfg;
  other.planes = {Plane::kCoronal};
  try {
    load_checkpoint(dir / "m.mpkc", other);
    FAIL("expected FormatError");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("coronal.backbone.stem.weight") != std::string::npos);
  }

  {
    std::ofstream f(dir / "bad.mpkc", std::ios::binary);
    f << "NOPE1234";
  }
  CHECK_THROWS_AS(load_tensors(dir / "bad.mpkc"), FormatError);

  const auto full = std::filesystem::file_size(dir / "m.mpkc");
  std::filesystem::copy_file(dir / "m.mpkc", dir / "cut.mpkc");
  std::filesystem::resize_file(dir / "cut.mpkc", full / 2);
  CHECK_THROWS_AS(load_tensors(dir / "cut.mpkc"), TruncatedError);
  CHECK_THROWS_AS(load_tensors(dir / "missing.mpkc"), IoError);
}
