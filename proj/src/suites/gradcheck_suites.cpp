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

#include "suites/gradcheck_suites.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "kan/kan.hpp"
#include "model/attention.hpp"
#include "model/backbone.hpp"
#include "model/fusion.hpp"
#include "model/model.hpp"
#include "train/loss.hpp"

namespace mpk::suites {

namespace {

using model::Plane;

struct Ctx {
  SuiteOptions opt;
  std::vector<GradcheckReport>* out;
  const std::function<void(const GradcheckReport&)>* cb;
  std::uint64_t counter = 0;

  Tensor rand(Shape s, double lo = -1.0, double hi = 1.0) {
    Rng rng(Rng::derive(opt.seed, ++counter));
    return Tensor::uniform(std::move(s), lo, hi, rng);
  }
  // Random weighting so every output coordinate matters. Depends only on
  // the shape so repeated evaluations see the same objective.
  Tensor weigh(const Tensor& y) {
    Rng rng(Rng::derive(opt.seed ^ 0x5eedu, y.numel()));
    return sum_all(mul(y, Tensor::uniform(y.shape(), -1.0, 1.0, rng)));
  }

  void emit(GradcheckReport r) {
    if (*cb) (*cb)(r);
    out->push_back(std::move(r));
  }
  void check(const std::string& name, std::function<Tensor()> fn, std::vector<Tensor> params) {
    GradcheckOptions g;
    g.samples = opt.samples;
    g.step = opt.step;
    g.tolerance = opt.tolerance;
    g.seed = Rng::derive(opt.seed, ++counter);
    emit(gradcheck(name, fn, std::move(params), g));
  }
  void invariant(const std::string& name, std::size_t checked, double deviation, double tolerance) {
    GradcheckReport r;
    r.name = "invariant:" + name;
    r.checked = checked;
    r.max_rel_error = deviation;
    r.tolerance = tolerance;
    emit(std::move(r));
  }
};

// Keeps values away from relu / max / clamp kinks by pushing them out of
// (-margin, margin) around zero.
Tensor off_kink(Tensor t, double margin = 0.05) {
  for (auto& v : t.mutable_data()) {
    if (std::abs(v) < margin) v = v < 0 ? v - margin : v + margin;
  }
  return t;
}

void elementwise_suites(Ctx& c, std::size_t n) {
  const Shape s{2, n, n, n};
  Tensor a = c.rand(s), b = c.rand(s);
  c.check("add", [&] { return c.weigh(add(a, b)); }, {a, b});
  c.check("sub", [&] { return c.weigh(sub(a, b)); }, {a, b});
  c.check("mul", [&] { return c.weigh(mul(a, b)); }, {a, b});
  c.check("scale", [&] { return c.weigh(scale(a, -1.7)); }, {a});
  Tensor wa = c.rand(s).detach(), wb = c.rand(s).detach();
  c.check("sigmoid", [&] { return sum_all(mul(sigmoid(scale(a, 3.0)), wa)); }, {a});
  Tensor k = off_kink(c.rand(s));
  c.check("relu", [&] { return sum_all(mul(relu(k), wa)); }, {k});
  c.check("silu", [&] { return sum_all(mul(silu(scale(a, 2.0)), wa)); }, {a});
  Tensor pos = c.rand(s, 0.2, 2.0);
  c.check("log", [&] { return sum_all(mul(log(pos), wa)); }, {pos});
  c.check("sqrt", [&] { return sum_all(mul(sqrt(pos), wa)); }, {pos});
  Tensor cl = c.rand(s, -2.0, 2.0);
  for (auto& v : cl.mutable_data()) {
    if (std::abs(std::abs(v) - 1.0) < 0.05) v *= 1.2;
  }
  c.check("clamp", [&] { return sum_all(mul(clamp(cl, -1.0, 1.0), wb)); }, {cl});

  Tensor m1 = c.rand({6, 5}), m2 = c.rand({5, 7}), wm = c.rand({6, 7}).detach();
  c.check("matmul", [&] { return sum_all(mul(matmul(m1, m2), wm)); }, {m1, m2});

  Tensor ca = c.rand({2, n, n, n}), cb = c.rand({3, n, n, n});
  Tensor wc = c.rand({5, n, n, n}).detach();
  c.check("concat_channels", [&] { return sum_all(mul(concat_channels(ca, cb), wc)); }, {ca, cb});
  Tensor ws = c.rand({2, n, n, n}).detach();
  c.check("slice_channels", [&] { return sum_all(mul(slice_channels(concat_channels(ca, cb), 1, 3), ws)); }, {ca, cb});
  c.check("stack", [&] {
    const Tensor parts[] = {a, b, a};
    return c.weigh(stack(parts));
  }, {a, b});
  c.check("sum_all", [&] { return mul(sum_all(a), sum_all(b)); }, {a, b});
  c.check("mean_all", [&] { return mul(mean_all(a), mean_all(mul(a, b))); }, {a, b});
  Tensor wmo = c.rand({2, n}).detach();
  c.check("mean_over", [&] { return sum_all(mul(mean_over(a, {1, 3}), wmo)); }, {a});
  Tensor wmx = c.rand({n, n, n}).detach();
  c.check("max_over", [&] { return sum_all(mul(max_over(a, {0}), wmx)); }, {a});
  Tensor sm = c.rand({12, 5}, -2.0, 2.0), wsm = c.rand({12, 5}).detach();
  c.check("softmax", [&] { return sum_all(mul(softmax(sm, 1), wsm)); }, {sm});
  Tensor wp = c.rand({n, 2, n, n}).detach();
  c.check("permute_axes", [&] { return sum_all(mul(permute_axes(a, {2, 0, 3, 1}), wp)); }, {a});
  Tensor wr = c.rand({n * n, 2 * n}).detach();
  c.check("reshape", [&] { return sum_all(mul(reshape(a, {n * n, 2 * n}), wr)); }, {a});
  Tensor g = c.rand({2 * n, 1, n, n}), wg = c.rand({2 * n, n, n, n}).detach();
  c.check("broadcast_to", [&] { return sum_all(mul(broadcast_to(g, {2 * n, n, n, n}), wg)); }, {g});
  c.check("select", [&] { return mul(select(a, 3), select(b, 7)); }, {a, b});
}

void conv_suites(Ctx& c, std::size_t n) {
  Tensor x = c.rand({2, n, n, n}), w3 = c.rand({3, 2, 3, 3, 3}, -0.5, 0.5), b3 = c.rand({3});
  c.check("conv3d_k3_p1", [&] { return c.weigh(conv3d(x, w3, b3, 1, 1)); }, {x, w3, b3});
  Tensor w2 = c.rand({4, 2, 2, 2, 2}, -0.5, 0.5), b2 = c.rand({4});
  c.check("conv3d_k2_s2", [&] { return c.weigh(conv3d(x, w2, b2, 2, 0)); }, {x, w2, b2});
  Tensor w1 = c.rand({3, 2, 1, 1, 1}), b1 = c.rand({3});
  c.check("conv3d_k1", [&] { return c.weigh(conv3d(x, w1, b1, 1, 0)); }, {x, w1, b1});
  // Distinct values so the window maxima are unambiguous.
  Tensor p = c.rand({2, n, n, n});
  {
    auto v = p.mutable_data();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(1.0 + 0.731 * static_cast<double>(i)) * 2.0;
  }
  c.check("maxpool3d", [&] { return c.weigh(maxpool3d(p)); }, {p});
}

void kan_suites(Ctx& c) {
  kan::SplineGrid grid;
  auto layer = kan::kan_init(5, 4, grid, Rng::derive(c.opt.seed, 77));
  // Perturb the spline weights so they are not all equal to one.
  {
    auto sw = layer.spline_weight.mutable_data();
    for (std::size_t i = 0; i < sw.size(); ++i) sw[i] += 0.3 * std::sin(1.9 * static_cast<double>(i));
  }
  Tensor h = c.rand({3, 5}, -1.3, 1.3);
  // Keep inputs off the knots and off the clamp boundary.
  for (auto& v : h.mutable_data()) {
    if (std::abs(std::abs(v) - 1.0) < 0.02) v *= 0.9;
  }
  auto params = layer.parameters();
  params.push_back(h);
  c.check("kan_layer", [&] { return c.weigh(kan::kan_layer_forward(h, layer)); }, params);
  const std::size_t dims[] = {5, 3, 5};
  auto net = kan::kan_network_init(dims, grid, Rng::derive(c.opt.seed, 78));
  auto np = net.parameters();
  c.check("kan_network", [&] { return c.weigh(kan::kan_forward(scale(h, 0.6), net)); }, np);
}

void attention_suites(Ctx& c, std::size_t n) {
  for (auto variant : {model::AttentionVariant::kAvgKan, model::AttentionVariant::kAvgMlp,
                       model::AttentionVariant::kMaxAvgKan, model::AttentionVariant::kMaxAvgMlp}) {
    model::KanscOptions o;
    o.channels = 6;
    o.hidden = 4;
    o.variant = variant;
    auto p = model::kansc_init(o, Rng::derive(c.opt.seed, 90 + static_cast<int>(variant)));
    Tensor f = c.rand({6, n, n, n});
    {
      auto v = f.mutable_data();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.3 + 1.37 * static_cast<double>(i)) * 1.5;
    }
    std::vector<Tensor> params;
    for (auto& [name, t] : p.named_parameters()) params.push_back(t);
    params.push_back(f);
    c.check("kansc_" + std::string(model::attention_variant_name(variant)),
            [&] { return c.weigh(model::kansc_forward(f, p).features); }, params);
  }
}

void head_and_loss_suites(Ctx& c) {
  auto head = model::head_init(6, 5, Rng::derive(c.opt.seed, 60));
  Tensor f = c.rand({6, 4});
  auto hp = head.named_parameters();
  std::vector<Tensor> params;
  for (auto& [name, t] : hp) params.push_back(t);
  params.push_back(f);
  c.check("head", [&] {
    auto o = model::head_forward(f, head);
    return add(c.weigh(o.global_logits), add(c.weigh(o.patch_weights), c.weigh(o.patch_logits)));
  }, params);

  std::vector<Tensor> z;
  std::vector<int> labels;
  for (int i = 0; i < 30; ++i) {
    z.push_back(c.rand({2}, -2.0, 2.0));
    labels.push_back(i % 3 == 0 ? 0 : 1);
  }
  c.check("ce_loss", [&] { return train::ce_loss(z, labels); }, z);
  Tensor mw = c.rand({20}, 0.05, 0.95), pl = c.rand({20, 2}, -2.0, 2.0);
  c.check("slc_loss", [&] { return train::slc_loss(mw, pl, 1); }, {mw, pl});
}

void backbone_suite(Ctx& c, std::size_t n) {
  auto bb = model::backbone_init(Rng::derive(c.opt.seed, 50));
  Tensor vol = c.rand({1, n, n, n});
  std::vector<Tensor> params;
  for (auto& [name, t] : bb.named_parameters()) params.push_back(t);
  c.check("backbone", [&] { return c.weigh(model::backbone_forward(vol, bb).output()); }, params);
}

void model_suite(Ctx& c, std::size_t n) {
  model::ModelConfig cfg;
  auto params = model::model_init(cfg, Rng::derive(c.opt.seed, 40));
  Tensor vol = c.rand({1, n, n, n});
  train::LossConfig loss;
  loss.ramp_start_epoch = 0;
  const int epoch = 5;  // lambda_eff > 0
  c.check("model_end_to_end", [&] {
    auto out = model::model_forward(vol, params);
    const Tensor logits[] = {out.global_logits()};
    const int labels[] = {1};
    Tensor ce = train::ce_loss(logits, labels);
    Tensor slc = train::slc_loss(out.head.patch_weights, out.head.patch_logits, 1);
    return train::total_loss(ce, slc, epoch, loss);
  }, params.parameters());
}

void invariant_suites(Ctx& c) {
  kan::SplineGrid grid;
  double pou = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double x = -1.0 + 2.0 * i / 1001.0;
    const auto b = kan::bspline_basis(x, grid);
    double s = 0.0;
    for (double v : b) s += v;
    pou = std::max(pou, std::abs(s - 1.0));
  }
  c.invariant("partition_of_unity", 1000, pou, 1e-9);

  Tensor v = c.rand({1, 4, 6, 8});
  double round_trip = 0.0;
  for (auto p : model::kAllPlanes) {
    Tensor r = model::realign(model::reorient(v, p), p);
    for (std::size_t i = 0; i < v.numel(); ++i) round_trip = std::max(round_trip, std::abs(r.at(i) - v.at(i)));
  }
  c.invariant("plane_round_trip", 3, round_trip, 1e-300);

  model::KanscOptions o;
  o.channels = 4;
  o.hidden = 3;
  auto p = model::kansc_init(o, 5);
  Tensor f = c.rand({4, 3, 3, 3}, -3.0, 3.0);
  auto r = model::kansc_forward(f, p);
  double outside = 0.0;
  for (const Tensor* m : {&r.spatial_map, &r.channel_map}) {
    for (double x : m->data()) {
      if (!(x > 0.0 && x < 1.0)) outside = 1.0;
    }
  }
  c.invariant("attention_range", r.spatial_map.numel() + r.channel_map.numel(), outside, 0.5);

  train::LossConfig lc;
  double prev = 0.0, violation = 0.0;
  for (int e = 1; e <= 100; ++e) {
    const double l = train::lambda_effective(e, lc);
    violation = std::max({violation, prev - l, l - lc.lambda});
    prev = l;
  }
  c.invariant("lambda_monotone", 100, violation, 1e-15);
}

}  // namespace

Scale parse_scale(std::string_view name) {
  if (name == "tiny") return Scale::kTiny;
  if (name == "small") return Scale::kSmall;
  throw UsageError("unknown gradcheck scale '" + std::string(name) + "' (expected tiny or small)");
}

std::vector<GradcheckReport> run_all_suites(const SuiteOptions& options,
                                            const std::function<void(const GradcheckReport&)>& on_report) {
  std::vector<GradcheckReport> out;
  Ctx c{options, &out, &on_report};
  const bool small = options.scale == Scale::kSmall;
  elementwise_suites(c, small ? 6 : 3);
  conv_suites(c, small ? 8 : 4);
  kan_suites(c);
  attention_suites(c, small ? 4 : 2);
  head_and_loss_suites(c);
  backbone_suite(c, small ? 64 : 32);
  model_suite(c, small ? 64 : 32);
  invariant_suites(c);
  return out;
}

}  // namespace mpk::suites
