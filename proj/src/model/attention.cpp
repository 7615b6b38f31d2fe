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

#include "model/attention.hpp"

#include <array>
#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"

namespace mpk::model {

namespace {

constexpr std::array<std::string_view, 4> kVariantNames = {"avg_kan", "avg_mlp", "maxavg_kan", "maxavg_mlp"};

Tensor mlp_forward(const Tensor& v, const ChannelMlp& m) {
  Tensor h = relu(add(matmul(v, m.w1), m.b1));
  return add(matmul(h, m.w2), m.b2);
}

Tensor channel_net(const Tensor& v, const KanscParams& p) {
  return uses_kan(p.variant) ? kan::kan_forward(v, p.kan) : mlp_forward(v, p.mlp);
}

void check_features(const Tensor& f, const KanscParams& p, const char* op) {
  if (f.rank() != 4) throw ShapeError(std::string(op) + ": expected [C,D,H,W], got " + shape_str(f.shape()));
  if (f.dim(0) != p.channels) {
    throw ConfigError(std::string(op) + ": attention configured for " + std::to_string(p.channels) +
                      " channels but feature map has " + std::to_string(f.dim(0)));
  }
}

}  // namespace

AttentionVariant parse_attention_variant(std::string_view name) {
  for (std::size_t i = 0; i < kVariantNames.size(); ++i) {
    if (kVariantNames[i] == name) return static_cast<AttentionVariant>(i);
  }
  throw ConfigError("unknown attention variant '" + std::string(name) +
                    "' (expected avg_kan, avg_mlp, maxavg_kan or maxavg_mlp)");
}

std::string_view attention_variant_name(AttentionVariant v) { return kVariantNames[static_cast<std::size_t>(v)]; }

KanscParams kansc_init(const KanscOptions& options, std::uint64_t seed) {
  if (options.channels == 0 || options.hidden == 0) throw ConfigError("attention widths must be positive");
  KanscParams p;
  p.variant = options.variant;
  p.channels = options.channels;
  Rng rng(Rng::derive(seed, 0));
  p.spatial = conv3d_init(2, 1, 3, 1, 1, rng);
  if (uses_kan(options.variant)) {
    const std::array<std::size_t, 3> dims = {options.channels, options.hidden, options.channels};
    p.kan = kan::kan_network_init(dims, options.grid, Rng::derive(seed, 1));
  } else {
    Rng mr(Rng::derive(seed, 2));
    const double c = static_cast<double>(options.channels), h = static_cast<double>(options.hidden);
    p.mlp.w1 = Tensor::uniform({options.channels, options.hidden}, -1.0 / std::sqrt(c), 1.0 / std::sqrt(c), mr);
    p.mlp.b1 = Tensor::uniform({1, options.hidden}, -1.0 / std::sqrt(c), 1.0 / std::sqrt(c), mr);
    p.mlp.w2 = Tensor::uniform({options.hidden, options.channels}, -1.0 / std::sqrt(h), 1.0 / std::sqrt(h), mr);
    p.mlp.b2 = Tensor::uniform({1, options.channels}, -1.0 / std::sqrt(h), 1.0 / std::sqrt(h), mr);
    for (auto* t : {&p.mlp.w1, &p.mlp.b1, &p.mlp.w2, &p.mlp.b2}) t->set_requires_grad(true);
  }
  return p;
}

NamedTensors KanscParams::named_parameters() const {
  NamedTensors out;
  append_named(out, "spatial.", conv3d_named(spatial));
  if (uses_kan(variant)) {
    for (std::size_t l = 0; l < kan.layers.size(); ++l) {
      const std::string prefix = "kan" + std::to_string(l) + ".";
      out.emplace_back(prefix + "base_weight", kan.layers[l].base_weight);
      out.emplace_back(prefix + "spline_weight", kan.layers[l].spline_weight);
      out.emplace_back(prefix + "spline_coeffs", kan.layers[l].spline_coeffs);
    }
  } else {
    out.emplace_back("mlp.w1", mlp.w1);
    out.emplace_back("mlp.b1", mlp.b1);
    out.emplace_back("mlp.w2", mlp.w2);
    out.emplace_back("mlp.b2", mlp.b2);
  }
  return out;
}

SpatialResult spatial_attention(const Tensor& f, const KanscParams& params) {
  check_features(f, params, "spatial_attention");
  const Shape spatial{1, f.dim(1), f.dim(2), f.dim(3)};
  Tensor f_max = reshape(max_over(f, {0}), spatial);
  Tensor f_avg = reshape(mean_over(f, {0}), spatial);
  Tensor m = sigmoid(conv3d_apply(concat_channels(f_max, f_avg), params.spatial));
  return {mul(broadcast_to(m, f.shape()), f), m};
}

ChannelResult channel_attention(const Tensor& f, const KanscParams& params) {
  check_features(f, params, "channel_attention");
  const std::size_t c = f.dim(0);
  Tensor pre = channel_net(reshape(mean_over(f, {1, 2, 3}), {1, c}), params);
  if (uses_max(params.variant)) pre = add(pre, channel_net(reshape(max_over(f, {1, 2, 3}), {1, c}), params));
  Tensor m = sigmoid(reshape(pre, {c}));
  Tensor gate = broadcast_to(reshape(m, {c, 1, 1, 1}), f.shape());
  return {mul(gate, f), m};
}

KanscResult kansc_forward(const Tensor& f, const KanscParams& params) {
  auto s = spatial_attention(f, params);
  auto c = channel_attention(s.features, params);
  return {c.features, s.map, c.map};
}

}  // namespace mpk::model
