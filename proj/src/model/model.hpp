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
#include <vector>

#include "core/tensor.hpp"
#include "kan/kan.hpp"
#include "model/attention.hpp"
#include "model/backbone.hpp"
#include "model/fusion.hpp"
#include "model/layers.hpp"

namespace mpk::model {

struct ModelConfig {
  std::vector<Plane> planes = {Plane::kAxial, Plane::kCoronal, Plane::kSagittal};
  AttentionVariant attention = AttentionVariant::kAvgKan;
  bool use_attention = true;
  std::size_t attention_hidden = 32;
  std::size_t head_hidden = 64;
  kan::SplineGrid grid;

  void validate() const;
};

struct Branch {
  Plane plane = Plane::kAxial;
  BackboneParams backbone;
  KanscParams attention;
};

struct ModelParams {
  ModelConfig config;
  std::vector<Branch> branches;  // one per active plane, in plane order
  HeadParams head;

  NamedTensors named_parameters() const;
  std::vector<Tensor> parameters() const;
  std::size_t parameter_count() const;
};

ModelParams model_init(const ModelConfig& config, std::uint64_t seed);

struct BranchTrace {
  Plane plane = Plane::kAxial;
  Tensor stage5;          // backbone output in the plane's own frame
  Tensor realigned;       // stage5 permuted back to the axial frame
  Tensor attended;        // after attention, axial frame
};

struct ModelOutput {
  HeadOutput head;
  std::vector<BranchTrace> branches;
  const Tensor& global_logits() const { return head.global_logits; }
};

// vol [1, D, H, W] in the axial frame. Per plane: reorient, backbone,
// realign to axial, attention; then the branches are summed and flattened
// to [256, N] for the head.
ModelOutput model_forward(const Tensor& vol, const ModelParams& params);

// softmax(global_logits)[1]
double positive_probability(const ModelOutput& out);

}  // namespace mpk::model
