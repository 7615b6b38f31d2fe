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

#include <array>
#include <cstddef>
#include <cstdint>

#include "core/tensor.hpp"
#include "model/layers.hpp"

namespace mpk::model {

// One residual block: x -> convA -> relu -> convB, out = relu(x + convB).
struct ResidualBlock {
  Conv3dParams conv_a;
  Conv3dParams conv_b;
};

// Five-stage branch. Stages 1-4 concatenate their input with the block
// output, doubling the width: 16 -> 32 -> 64 -> 128 -> 256. Stage 5 keeps
// 256 channels through two pointwise convs.
struct BackboneParams {
  Conv3dParams stem;                  // 1 -> 16, k=2, s=2
  std::array<ResidualBlock, 4> blocks;  // widths 16, 32, 64, 128
  Conv3dParams head_a;                // 256 -> 256, k=1
  Conv3dParams head_b;                // 256 -> 256, k=1

  NamedTensors named_parameters() const;
  std::size_t parameter_count() const;
};

inline constexpr std::size_t kBackboneDownsample = 32;
inline constexpr std::size_t kBackboneChannels = 256;
inline constexpr std::array<std::size_t, 5> kStageChannels = {32, 64, 128, 256, 256};

BackboneParams backbone_init(std::uint64_t seed);

// Activations after each stage, last entry is the branch output.
struct BackboneTrace {
  std::array<Tensor, 5> stages;
  const Tensor& output() const { return stages[4]; }
};

// vol [1, D, H, W] with D, H, W divisible by 32 -> [256, D/32, H/32, W/32]
BackboneTrace backbone_forward(const Tensor& vol, const BackboneParams& params);

// Throws ConfigError naming the first axis that is not a multiple of 32.
void check_backbone_input(const Shape& shape);

}  // namespace mpk::model
