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
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "data/volume.hpp"

namespace mpk::data {

// Synthetic subjects: an ellipsoidal "brain" of unit intensity with a
// smooth per-subject modulation and Gaussian noise. Class-1 subjects lose
// `lesion_delta` of intensity inside a sphere around `lesion_center`.
struct PhantomSpec {
  std::array<std::size_t, 3> dims = {64, 64, 64};
  std::array<double, 3> lesion_center = {16.0, 16.0, 16.0};
  double lesion_radius = 8.0;
  double lesion_delta = 1.0;
  // Uniform per-axis jitter of the lesion center, in voxels.
  double lesion_jitter = 0.0;
  double noise_sigma = 0.1;
  double background_amplitude = 0.1;
  std::uint64_t seed = 0;
  std::string group0 = "CN";
  std::string group1 = "AD";

  void validate() const;
};

// [phantom] section with keys dims, lesion_center, lesion_radius,
// lesion_delta, lesion_jitter, noise_sigma, background_amplitude, seed,
// group0, group1.
PhantomSpec parse_phantom_spec(std::string_view text, std::string_view source);
PhantomSpec load_phantom_spec(const std::filesystem::path& path);
std::string to_ini(const PhantomSpec& spec);

// Subject i of class 0 and subject i of class 1 share the background draw
// and differ in noise. Output order: all class 0, then all class 1.
std::vector<Volume> generate_phantoms(const PhantomSpec& spec, std::size_t n_per_class);

// Lesion center actually used for subject `index` of class 1.
std::array<double, 3> lesion_center_for(const PhantomSpec& spec, std::size_t index);
// Voxel mask (1 inside) of a sphere.
std::vector<unsigned char> sphere_mask(const std::array<std::size_t, 3>& dims, const std::array<double, 3>& center,
                                       double radius);

}  // namespace mpk::data
