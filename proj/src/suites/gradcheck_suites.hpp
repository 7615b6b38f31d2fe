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
#include <string_view>
#include <vector>

#include "core/gradcheck.hpp"

namespace mpk::suites {

enum class Scale { kTiny, kSmall };

Scale parse_scale(std::string_view name);

struct SuiteOptions {
  Scale scale = Scale::kTiny;
  std::size_t samples = 50;
  double step = 1e-5;
  double tolerance = 1e-4;
  std::uint64_t seed = 0;
};

// Finite-difference checks for every differentiable op and module, the
// end-to-end model (all planes, attention, ramped SLC), and a set of
// invariant checks reported in the same form (max deviation vs tolerance).
std::vector<GradcheckReport> run_all_suites(const SuiteOptions& options,
                                            const std::function<void(const GradcheckReport&)>& on_report = {});

}  // namespace mpk::suites
