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

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "core/tensor.hpp"

namespace mpk {

struct GradcheckOptions {
  std::size_t samples = 50;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

struct GradcheckReport {
  std::string name;
  std::size_t checked = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  bool passed() const { return checked > 0 && max_rel_error < tolerance; }
};

// Compares the tape gradient of `loss_fn` against central differences at
// `samples` coordinates drawn without replacement from `params` (all of
// them when there are fewer). Error per coordinate is
// |analytic - numeric| / max(1, |analytic|). `loss_fn` must depend on the
// params only through their current values.
GradcheckReport gradcheck(std::string name, const std::function<Tensor()>& loss_fn, std::vector<Tensor> params,
                          const GradcheckOptions& options = {});

}  // namespace mpk
