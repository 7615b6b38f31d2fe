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

#include "model/layers.hpp"

#include <cmath>

#include "core/ops.hpp"

namespace mpk::model {

Conv3dParams conv3d_init(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t stride,
                         std::size_t padding, Rng& rng) {
  const double fan_in = static_cast<double>(c_in * k * k * k);
  const double wb = 1.0 / std::sqrt(fan_in);
  const double bb = 1.0 / std::sqrt(fan_in);
  Conv3dParams p;
  p.weight = Tensor::uniform({c_out, c_in, k, k, k}, -wb, wb, rng);
  p.bias = Tensor::uniform({c_out}, -bb, bb, rng);
  p.weight.set_requires_grad(true);
  p.bias.set_requires_grad(true);
  p.stride = stride;
  p.padding = padding;
  return p;
}

Tensor conv3d_apply(const Tensor& x, const Conv3dParams& p) { return conv3d(x, p.weight, p.bias, p.stride, p.padding); }

NamedTensors conv3d_named(const Conv3dParams& p) { return {{"weight", p.weight}, {"bias", p.bias}}; }

}  // namespace mpk::model
