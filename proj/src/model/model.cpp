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

#include "model/model.hpp"

#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"

namespace mpk::model {

void ModelConfig::validate() const {
  if (planes.empty()) throw ConfigError("at least one plane must be active");
  for (std::size_t i = 1; i < planes.size(); ++i) {
    if (!(planes[i - 1] < planes[i])) throw ConfigError("planes must be distinct and in axial,coronal,sagittal order");
  }
  if (attention_hidden == 0) throw ConfigError("attention hidden width must be positive");
  if (head_hidden == 0) throw ConfigError("head hidden width must be positive");
  grid.validate();
}

ModelParams model_init(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p;
  p.config = config;
  for (auto plane : config.planes) {
    const auto stream = static_cast<std::uint64_t>(plane);
    Branch b;
    b.plane = plane;
    b.backbone = backbone_init(Rng::derive(seed, 10 + stream));
    if (config.use_attention) {
      KanscOptions opt;
      opt.channels = kBackboneChannels;
      opt.hidden = config.attention_hidden;
      opt.variant = config.attention;
      opt.grid = config.grid;
      b.attention = kansc_init(opt, Rng::derive(seed, 20 + stream));
    }
    p.branches.push_back(std::move(b));
  }
  p.head = head_init(kBackboneChannels, config.head_hidden, Rng::derive(seed, 30));
  return p;
}

NamedTensors ModelParams::named_parameters() const {
  NamedTensors out;
  for (const auto& b : branches) {
    const std::string prefix(plane_name(b.plane));
    append_named(out, prefix + ".backbone.", b.backbone.named_parameters());
    if (config.use_attention) append_named(out, prefix + ".kansc.", b.attention.named_parameters());
  }
  append_named(out, "head.", head.named_parameters());
  return out;
}

std::vector<Tensor> ModelParams::parameters() const {
  std::vector<Tensor> out;
  for (auto& [name, t] : named_parameters()) out.push_back(t);
  return out;
}

std::size_t ModelParams::parameter_count() const {
  std::size_t n = 0;
  for (auto& [name, t] : named_parameters()) n += t.numel();
  return n;
}

ModelOutput model_forward(const Tensor& vol, const ModelParams& params) {
  check_backbone_input(vol.shape());
  ModelOutput out;
  std::vector<Tensor> maps;
  for (const auto& b : params.branches) {
    BranchTrace trace;
    trace.plane = b.plane;
    trace.stage5 = backbone_forward(reorient(vol, b.plane), b.backbone).output();
    trace.realigned = realign(trace.stage5, b.plane);
    trace.attended = params.config.use_attention ? kansc_forward(trace.realigned, b.attention).features
                                                 : trace.realigned;
    maps.push_back(trace.attended);
    out.branches.push_back(std::move(trace));
  }
  Tensor fused = fuse(maps);
  const std::size_t c = fused.dim(0);
  const std::size_t n = fused.numel() / c;
  out.head = head_forward(reshape(fused, {c, n}), params.head);
  return out;
}

double positive_probability(const ModelOutput& out) {
  auto z = out.global_logits().data();
  const double m = std::max(z[0], z[1]);
  const double e0 = std::exp(z[0] - m), e1 = std::exp(z[1] - m);
  return e1 / (e0 + e1);
}

}  // namespace mpk::model
