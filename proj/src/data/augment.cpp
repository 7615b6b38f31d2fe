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

#include "data/augment.hpp"

#include <algorithm>
#include <cmath>

namespace mpk::data {

Volume translate(const Volume& vol, const std::array<std::int64_t, 3>& shift) {
  if (shift[0] == 0 && shift[1] == 0 && shift[2] == 0) return vol;
  const auto dims = vol.dims();
  const auto D = static_cast<std::int64_t>(dims[0]), H = static_cast<std::int64_t>(dims[1]),
             W = static_cast<std::int64_t>(dims[2]);
  std::vector<double> out(vol.voxels.numel(), 0.0);
  auto in = vol.voxels.data();
  for (std::int64_t d = 0; d < D; ++d) {
    const std::int64_t sd = d - shift[0];
    if (sd < 0 || sd >= D) continue;
    for (std::int64_t h = 0; h < H; ++h) {
      const std::int64_t sh = h - shift[1];
      if (sh < 0 || sh >= H) continue;
      for (std::int64_t w = 0; w < W; ++w) {
        const std::int64_t sw = w - shift[2];
        if (sw < 0 || sw >= W) continue;
        out[static_cast<std::size_t>((d * H + h) * W + w)] = in[static_cast<std::size_t>((sd * H + sh) * W + sw)];
      }
    }
  }
  Volume r = vol;
  r.voxels = Tensor(vol.voxels.shape(), std::move(out));
  return r;
}

Volume flip_w(const Volume& vol) {
  const std::size_t W = vol.dims()[2];
  std::vector<double> out(vol.voxels.data().begin(), vol.voxels.data().end());
  for (std::size_t row = 0; row < out.size(); row += W) {
    std::reverse(out.begin() + static_cast<std::ptrdiff_t>(row), out.begin() + static_cast<std::ptrdiff_t>(row + W));
  }
  Volume r = vol;
  r.voxels = Tensor(vol.voxels.shape(), std::move(out));
  return r;
}

std::array<std::int64_t, 3> translation_limits(const std::array<std::size_t, 3>& dims, double fraction) {
  std::array<std::int64_t, 3> t{};
  for (std::size_t i = 0; i < 3; ++i) t[i] = static_cast<std::int64_t>(std::ceil(static_cast<double>(dims[i]) * fraction));
  return t;
}

Volume augment(const Volume& vol, const AugmentOptions& options, Rng& rng) {
  const auto limits = translation_limits(vol.dims(), options.translate_fraction);
  std::array<std::int64_t, 3> shift{};
  for (std::size_t i = 0; i < 3; ++i) shift[i] = limits[i] > 0 ? rng.integer(-limits[i], limits[i]) : 0;
  Volume out = translate(vol, shift);
  if (options.flip && rng.bernoulli(options.flip_probability)) out = flip_w(out);
  return out;
}

}  // namespace mpk::data
