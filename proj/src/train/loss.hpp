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
#include <span>
#include <string_view>

#include "core/tensor.hpp"

namespace mpk::train {

enum class RampMode { kSmoothed, kStep };

RampMode parse_ramp_mode(std::string_view name);
std::string_view ramp_mode_name(RampMode m);

struct LossConfig {
  double lambda = 0.2;
  int ramp_start_epoch = 20;
  int ramp_steps = 20;
  RampMode mode = RampMode::kSmoothed;

  void validate() const;
};

inline constexpr double kProbabilityClamp = 1e-12;

// Mean over the batch of -[(1-y) log(1-p) + y log p], p = softmax(logits)[1]
// clamped to [1e-12, 1-1e-12]. Each logits tensor has shape [2].
Tensor ce_loss(std::span<const Tensor> global_logits, std::span<const int> labels);
// sqrt(sum_i (M_i - softmax(alpha_i)[label])^2). weights [N], logits [N, 2].
Tensor slc_loss(const Tensor& patch_weights, const Tensor& patch_logits, int label);

// Epochs are 1-based. Zero through ramp_start; afterwards either the full
// lambda (step) or lambda * min((epoch - ramp_start) / ramp_steps, 1).
double lambda_effective(int epoch, const LossConfig& cfg);
Tensor total_loss(const Tensor& ce, const Tensor& slc, int epoch, const LossConfig& cfg);

}  // namespace mpk::train
