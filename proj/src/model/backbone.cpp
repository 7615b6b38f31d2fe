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

#include "model/backbone.hpp"

#include <string>

#include "core/error.hpp"
#include "core/ops.hpp"

namespace mpk::model {

namespace {

constexpr std::array<std::size_t, 4> kBlockWidths = {16, 32, 64, 128};
constexpr std::array<std::size_t, 4> kBlockKernels = {3, 3, 3, 1};

Tensor residual_stage(const Tensor& x, const ResidualBlock& b) {
  Tensor h = relu(conv3d_apply(x, b.conv_a));
  h = conv3d_apply(h, b.conv_b);
  Tensor out = relu(add(x, h));
  return concat_channels(x, out);
}

}  // namespace

void check_backbone_input(const Shape& shape) {
  static const char* kAxes[] = {"D", "H", "W"};
  if (shape.size() != 4 || shape[0] != 1) {
    throw ShapeError("backbone input must be [1,D,H,W], got " + shape_str(shape));
  }
  for (std::size_t i = 0; i < 3; ++i) {
    if (shape[i + 1] % kBackboneDownsample != 0) {
      throw ConfigError(std::string("backbone input axis ") + kAxes[i] + " has extent " +
                        std::to_string(shape[i + 1]) + ", which is not a multiple of 32");
    }
  }
}

BackboneParams backbone_init(std::uint64_t seed) {
  Rng rng(seed);
  BackboneParams p;
  p.stem = conv3d_init(1, kBlockWidths[0], 2, 2, 0, rng);
  for (std::size_t s = 0; s < 4; ++s) {
    const std::size_t w = kBlockWidths[s], k = kBlockKernels[s], pad = k / 2;
    p.blocks[s].conv_a = conv3d_init(w, w, k, 1, pad, rng);
    p.blocks[s].conv_b = conv3d_init(w, w, k, 1, pad, rng);
  }
  p.head_a = conv3d_init(kBackboneChannels, kBackboneChannels, 1, 1, 0, rng);
  p.head_b = conv3d_init(kBackboneChannels, kBackboneChannels, 1, 1, 0, rng);
  return p;
}

NamedTensors BackboneParams::named_parameters() const {
  NamedTensors out;
  append_named(out, "stem.", conv3d_named(stem));
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    const std::string prefix = "stage" + std::to_string(s + 1) + ".";
    append_named(out, prefix + "conv_a.", conv3d_named(blocks[s].conv_a));
    append_named(out, prefix + "conv_b.", conv3d_named(blocks[s].conv_b));
  }
  append_named(out, "stage5.conv_a.", conv3d_named(head_a));
  append_named(out, "stage5.conv_b.", conv3d_named(head_b));
  return out;
}

std::size_t BackboneParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t.numel();
  return n;
}

BackboneTrace backbone_forward(const Tensor& vol, const BackboneParams& params) {
  check_backbone_input(vol.shape());
  BackboneTrace trace;
  Tensor x = conv3d_apply(vol, params.stem);
  x = residual_stage(x, params.blocks[0]);
  trace.stages[0] = x;
  for (std::size_t s = 1; s < 4; ++s) {
    x = residual_stage(maxpool3d(x), params.blocks[s]);
    trace.stages[s] = x;
  }
  x = maxpool3d(x);
  x = relu(conv3d_apply(x, params.head_a));
  x = relu(conv3d_apply(x, params.head_b));
  trace.stages[4] = x;
  return trace;
}

}  // namespace mpk::model
