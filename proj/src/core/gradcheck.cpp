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

#include "core/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace mpk {

GradcheckReport gradcheck(std::string name, const std::function<Tensor()>& loss_fn, std::vector<Tensor> params,
                          const GradcheckOptions& options) {
  GradcheckReport report;
  report.name = std::move(name);
  report.tolerance = options.tolerance;

  for (auto& p : params) {
    p.set_requires_grad(true);
    p.zero_grad();
  }
  {
    Tape tape;
    Tensor loss = loss_fn();
    tape.backward(loss);
  }

  // (param index, flat coordinate) pairs to probe.
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::size_t j = 0; j < params[i].numel(); ++j) coords.emplace_back(i, j);
  }
  if (coords.size() > options.samples) {
    Rng rng(options.seed);
    for (std::size_t i = 0; i < options.samples; ++i) {
      auto j = static_cast<std::size_t>(rng.integer(static_cast<std::int64_t>(i),
                                                    static_cast<std::int64_t>(coords.size() - 1)));
      std::swap(coords[i], coords[j]);
    }
    coords.resize(options.samples);
  }

  NoGradGuard no_grad;
  for (auto [pi, j] : coords) {
    auto& p = params[pi];
    const double analytic = p.has_grad() ? p.grad()[j] : 0.0;
    auto values = p.mutable_data();
    const double saved = values[j];
    values[j] = saved + options.step;
    const double up = loss_fn().item();
    values[j] = saved - options.step;
    const double down = loss_fn().item();
    values[j] = saved;
    const double numeric = (up - down) / (2.0 * options.step);
    double err = std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
    if (!std::isfinite(err)) err = std::numeric_limits<double>::infinity();
    report.max_rel_error = std::max(report.max_rel_error, err);
    ++report.checked;
  }
  for (auto& p : params) p.zero_grad();
  return report;
}

}  // namespace mpk
