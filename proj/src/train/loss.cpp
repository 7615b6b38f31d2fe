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

#include "train/loss.hpp"

#include <algorithm>
#include <string>

#include "core/error.hpp"
#include "core/ops.hpp"

namespace mpk::train {

RampMode parse_ramp_mode(std::string_view name) {
  if (name == "smoothed") return RampMode::kSmoothed;
  if (name == "step") return RampMode::kStep;
  throw ConfigError("unknown ramp mode '" + std::string(name) + "' (expected smoothed or step)");
}

std::string_view ramp_mode_name(RampMode m) { return m == RampMode::kStep ? "step" : "smoothed"; }

void LossConfig::validate() const {
  if (!(lambda >= 0.0)) throw ConfigError("loss lambda must be >= 0");
  if (ramp_steps < 1) throw ConfigError("loss ramp_steps must be >= 1");
  if (ramp_start_epoch < 0) throw ConfigError("loss ramp_start must be >= 0");
}

Tensor ce_loss(std::span<const Tensor> global_logits, std::span<const int> labels) {
  if (global_logits.empty() || global_logits.size() != labels.size()) {
    throw ShapeError("ce_loss: need one label per logits vector and a non-empty batch");
  }
  Tensor total;
  for (std::size_t m = 0; m < labels.size(); ++m) {
    if (labels[m] != 0 && labels[m] != 1) throw DataError("ce_loss: label " + std::to_string(labels[m]) + " is not 0 or 1");
    if (global_logits[m].shape() != Shape{2}) {
      throw ShapeError("ce_loss: logits must have shape [2], got " + shape_str(global_logits[m].shape()));
    }
    Tensor p = clamp(select(softmax(global_logits[m], 0), 1), kProbabilityClamp, 1.0 - kProbabilityClamp);
    Tensor term = labels[m] == 1 ? log(p) : log(sub(Tensor::scalar(1.0), p));
    total = total.defined() ? add(total, term) : term;
  }
  return scale(total, -1.0 / static_cast<double>(labels.size()));
}

Tensor slc_loss(const Tensor& patch_weights, const Tensor& patch_logits, int label) {
  if (label != 0 && label != 1) throw DataError("slc_loss: label " + std::to_string(label) + " is not 0 or 1");
  if (patch_logits.rank() != 2 || patch_logits.dim(1) != 2 || patch_weights.shape() != Shape{patch_logits.dim(0)}) {
    throw ShapeError("slc_loss: expected weights [N] and logits [N,2], got " + shape_str(patch_weights.shape()) +
                     " and " + shape_str(patch_logits.shape()));
  }
  const std::size_t n = patch_logits.dim(0);
  Tensor probs = permute_axes(softmax(patch_logits, 1), {1, 0});  // [2, N]
  Tensor target = reshape(slice_channels(probs, label, label + 1), {n});
  Tensor diff = sub(patch_weights, target);
  return sqrt(sum_all(mul(diff, diff)));
}

double lambda_effective(int epoch, const LossConfig& cfg) {
  if (epoch < 1) throw ConfigError("epochs are 1-based");
  if (epoch <= cfg.ramp_start_epoch) return 0.0;
  if (cfg.mode == RampMode::kStep) return cfg.lambda;
  const double frac = static_cast<double>(epoch - cfg.ramp_start_epoch) / static_cast<double>(cfg.ramp_steps);
  return cfg.lambda * std::min(frac, 1.0);
}

Tensor total_loss(const Tensor& ce, const Tensor& slc, int epoch, const LossConfig& cfg) {
  const double lam = lambda_effective(epoch, cfg);
  if (lam == 0.0) return ce;
  return add(ce, scale(slc, lam));
}

}  // namespace mpk::train
