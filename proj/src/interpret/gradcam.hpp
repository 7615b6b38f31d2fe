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
#include <span>
#include <vector>

#include "core/tensor.hpp"
#include "model/model.hpp"

namespace mpk::interpret {

struct GradcamOptions {
  // Use the attended (post-attention) maps instead of the backbone output.
  bool post_attention = false;
};

struct GradcamResult {
  std::array<std::size_t, 3> dims{};  // input (axial) dims
  // Per active plane, realigned and upsampled, before averaging.
  std::vector<std::vector<double>> plane_cams;
  std::vector<double> raw;  // mean of plane_cams
  std::vector<double> cam;  // raw min-max normalized to [0, 1]
  bool zero = false;        // raw was identically zero
};

// relu(sum_c w_c A_c) with w_c the spatial mean of d(score)/dA_c.
// activation and gradient are [C, d, h, w]; returns d*h*w values.
std::vector<double> cam_from_activation(const Tensor& activation, std::span<const double> gradient);

// Nearest-neighbour upsampling of a [d,h,w] grid by integer factors.
std::vector<double> upsample_nearest(std::span<const double> grid, const std::array<std::size_t, 3>& grid_dims,
                                     const std::array<std::size_t, 3>& factors);
// Permutes a [d,h,w] grid from a plane's frame back into the axial frame.
std::vector<double> realign_grid(std::span<const double> grid, const std::array<std::size_t, 3>& grid_dims,
                                 model::Plane plane, std::array<std::size_t, 3>& out_dims);

// (x - min) / (max - min); a constant positive map becomes all ones and a
// zero map stays zero.
std::vector<double> normalize_cam(std::span<const double> raw, bool* was_zero = nullptr);

// score = global_logits[target_class]. Parameter gradients are cleared
// afterwards.
GradcamResult gradcam(const model::ModelParams& params, const Tensor& vol, int target_class,
                      const GradcamOptions& options = {});

}  // namespace mpk::interpret
