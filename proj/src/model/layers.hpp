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
#include <utility>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"

namespace mpk::model {

using NamedTensors = std::vector<std::pair<std::string, Tensor>>;

inline void append_named(NamedTensors& out, const std::string& prefix, const NamedTensors& more) {
  for (const auto& [name, t] : more) out.emplace_back(prefix + name, t);
}

struct Conv3dParams {
  Tensor weight;  // [C_out, C_in, k, k, k]
  Tensor bias;    // [C_out]
  std::size_t stride = 1;
  std::size_t padding = 0;

  std::size_t out_channels() const { return weight.dim(0); }
  std::size_t in_channels() const { return weight.dim(1); }
  std::size_t kernel() const { return weight.dim(2); }
};

// Weights and bias U(+-1/sqrt(fan_in)).
Conv3dParams conv3d_init(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t stride,
                         std::size_t padding, Rng& rng);
Tensor conv3d_apply(const Tensor& x, const Conv3dParams& p);
NamedTensors conv3d_named(const Conv3dParams& p);

}  // namespace mpk::model
