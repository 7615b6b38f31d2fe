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
#include <string>
#include <string_view>

#include "core/tensor.hpp"
#include "kan/kan.hpp"
#include "model/layers.hpp"

namespace mpk::model {

enum class AttentionVariant { kAvgKan, kAvgMlp, kMaxAvgKan, kMaxAvgMlp };

AttentionVariant parse_attention_variant(std::string_view name);
std::string_view attention_variant_name(AttentionVariant v);
inline bool uses_kan(AttentionVariant v) { return v == AttentionVariant::kAvgKan || v == AttentionVariant::kMaxAvgKan; }
inline bool uses_max(AttentionVariant v) {
  return v == AttentionVariant::kMaxAvgKan || v == AttentionVariant::kMaxAvgMlp;
}

// Two-layer perceptron C -> hidden -> C with ReLU, used by the *_mlp variants.
struct ChannelMlp {
  Tensor w1;  // [C, hidden]
  Tensor b1;  // [1, hidden]
  Tensor w2;  // [hidden, C]
  Tensor b2;  // [1, C]
};

struct KanscParams {
  AttentionVariant variant = AttentionVariant::kAvgKan;
  std::size_t channels = 0;
  Conv3dParams spatial;  // [1, 2, 3, 3, 3], stride 1, pad 1
  kan::KanNetwork kan;   // C -> hidden -> C, *_kan variants
  ChannelMlp mlp;        // *_mlp variants

  NamedTensors named_parameters() const;
};

struct KanscOptions {
  std::size_t channels = 256;
  std::size_t hidden = 32;
  AttentionVariant variant = AttentionVariant::kAvgKan;
  kan::SplineGrid grid;
};

KanscParams kansc_init(const KanscOptions& options, std::uint64_t seed);

struct SpatialResult {
  Tensor features;  // F' [C, D, H, W]
  Tensor map;       // [1, D, H, W]
};
struct ChannelResult {
  Tensor features;  // F'' [C, D, H, W]
  Tensor map;       // [C]
};
struct KanscResult {
  Tensor features;
  Tensor spatial_map;
  Tensor channel_map;
};

// M = sigmoid(conv3x3x3([max_c F ; mean_c F])), F' = M * F.
SpatialResult spatial_attention(const Tensor& f, const KanscParams& params);
// v = mean over voxels of F' (plus the max vector for maxavg variants),
// M = sigmoid(net(v_avg) [+ net(v_max)]), F'' = M * F'.
ChannelResult channel_attention(const Tensor& f, const KanscParams& params);
KanscResult kansc_forward(const Tensor& f, const KanscParams& params);

}  // namespace mpk::model
