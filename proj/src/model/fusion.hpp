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
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/tensor.hpp"
#include "model/layers.hpp"

namespace mpk::model {

enum class Plane { kAxial = 0, kCoronal = 1, kSagittal = 2 };

inline constexpr std::array<Plane, 3> kAllPlanes = {Plane::kAxial, Plane::kCoronal, Plane::kSagittal};

std::string_view plane_name(Plane p);
Plane parse_plane(std::string_view name);
// Comma-separated list, e.g. "axial,coronal". Order is normalized and
// duplicates are rejected.
std::vector<Plane> parse_planes(std::string_view list);
std::string planes_str(std::span<const Plane> planes);

// Spatial permutation of (D, H, W) for each plane.
std::array<std::size_t, 3> plane_permutation(Plane p);
std::array<std::size_t, 3> plane_inverse(Plane p);

// [C, D, H, W] -> [C, ...] with the spatial axes permuted into the plane's frame.
Tensor reorient(const Tensor& vol, Plane p);
// Inverse of reorient on the spatial axes; the channel axis is untouched.
Tensor realign(const Tensor& fm, Plane p);
// Element-wise sum of the given maps; all must share one shape.
Tensor fuse(std::span<const Tensor> maps);

struct HeadParams {
  Tensor w;    // [d, C]
  Tensor v;    // [1, d]
  Tensor psi;  // [C, 2]

  NamedTensors named_parameters() const { return {{"w", w}, {"v", v}, {"psi", psi}}; }
};

inline constexpr std::size_t kNumClasses = 2;

HeadParams head_init(std::size_t channels, std::size_t hidden, std::uint64_t seed);

struct HeadOutput {
  Tensor patch_weights;  // [N]
  Tensor patch_logits;   // [N, 2]
  Tensor global_logits;  // [2]
  Tensor f_total;        // [C, N]
};

// M_i = sigmoid(v . relu(w F_i)), alpha_i = (M_i F_i) psi,
// global = mean_i alpha_i.
HeadOutput head_forward(const Tensor& f_total, const HeadParams& params);

}  // namespace mpk::model
