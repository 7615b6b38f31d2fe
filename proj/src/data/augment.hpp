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
#include <cstdint>

#include "core/rng.hpp"
#include "data/volume.hpp"

namespace mpk::data {

struct AugmentOptions {
  double translate_fraction = 1.0 / 40.0;
  bool flip = true;
  double flip_probability = 0.5;
};

// Integer shift per axis with zero fill: out[x] = in[x - shift].
Volume translate(const Volume& vol, const std::array<std::int64_t, 3>& shift);
// Mirrors the W (left-right) axis.
Volume flip_w(const Volume& vol);
// Max shift per axis, ceil(extent * fraction).
std::array<std::int64_t, 3> translation_limits(const std::array<std::size_t, 3>& dims, double fraction);
// Shift drawn uniformly from [-t, t] per axis, then a W flip with the
// configured probability. Label and dims are preserved.
Volume augment(const Volume& vol, const AugmentOptions& options, Rng& rng);

}  // namespace mpk::data
