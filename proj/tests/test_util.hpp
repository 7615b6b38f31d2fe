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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "core/rng.hpp"
#include "core/tensor.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

namespace testutil {

inline mpk::Tensor random_tensor(mpk::Shape shape, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  mpk::Rng rng(seed);
  return mpk::Tensor::uniform(std::move(shape), lo, hi, rng);
}

inline std::vector<double> values(const mpk::Tensor& t) { return {t.data().begin(), t.data().end()}; }

inline oracle::Vol to_vol(const mpk::Tensor& t) {
  return oracle::Vol{t.dim(0), t.dim(1), t.dim(2), t.dim(3), values(t)};
}

inline double max_abs_diff(const std::vector<double>& a, std::span<const double> b) {
  double m = a.size() == b.size() ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testutil
