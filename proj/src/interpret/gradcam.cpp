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

#include "interpret/gradcam.hpp"

#include <algorithm>

#include "core/error.hpp"
#include "core/ops.hpp"

namespace mpk::interpret {

std::vector<double> cam_from_activation(const Tensor& activation, std::span<const double> gradient) {
  if (activation.rank() != 4 || gradient.size() != activation.numel()) {
    throw ShapeError("gradcam: activation/gradient mismatch for " + shape_str(activation.shape()));
  }
  const std::size_t c = activation.dim(0);
  const std::size_t n = activation.numel() / c;
  auto a = activation.data();
  std::vector<double> cam(n, 0.0);
  for (std::size_t ch = 0; ch < c; ++ch) {
    double wc = 0.0;
    for (std::size_t i = 0; i < n; ++i) wc += gradient[ch * n + i];
    wc /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) cam[i] += wc * a[ch * n + i];
  }
  for (auto& v : cam) v = std::max(v, 0.0);
  return cam;
}

std::vector<double> upsample_nearest(std::span<const double> grid, const std::array<std::size_t, 3>& g,
                                     const std::array<std::size_t, 3>& f) {
  const std::array<std::size_t, 3> o = {g[0] * f[0], g[1] * f[1], g[2] * f[2]};
  std::vector<double> out(o[0] * o[1] * o[2]);
  std::size_t i = 0;
  for (std::size_t d = 0; d < o[0]; ++d) {
    for (std::size_t h = 0; h < o[1]; ++h) {
      for (std::size_t w = 0; w < o[2]; ++w, ++i) out[i] = grid[((d / f[0]) * g[1] + h / f[1]) * g[2] + w / f[2]];
    }
  }
  return out;
}

std::vector<double> realign_grid(std::span<const double> grid, const std::array<std::size_t, 3>& grid_dims,
                                 model::Plane plane, std::array<std::size_t, 3>& out_dims) {
  Tensor t(Shape{1, grid_dims[0], grid_dims[1], grid_dims[2]}, std::vector<double>(grid.begin(), grid.end()));
  NoGradGuard guard;
  Tensor r = model::realign(t, plane);
  out_dims = {r.dim(1), r.dim(2), r.dim(3)};
  return {r.data().begin(), r.data().end()};
}

std::vector<double> normalize_cam(std::span<const double> raw, bool* was_zero) {
  std::vector<double> out(raw.begin(), raw.end());
  if (out.empty()) return out;
  const auto [mn, mx] = std::minmax_element(out.begin(), out.end());
  const double lo = *mn, hi = *mx;
  const bool zero = hi == 0.0 && lo == 0.0;
  if (was_zero) *was_zero = zero;
  if (zero) return out;
  if (hi > lo) {
    for (auto& v : out) v = (v - lo) / (hi - lo);
  } else {
    std::fill(out.begin(), out.end(), 1.0);
  }
  return out;
}

GradcamResult gradcam(const model::ModelParams& params, const Tensor& vol, int target_class,
                      const GradcamOptions& options) {
  if (target_class < 0 || target_class >= static_cast<int>(model::kNumClasses)) {
    throw DataError("gradcam: target class " + std::to_string(target_class) + " out of range");
  }
  model::check_backbone_input(vol.shape());
  GradcamResult res;
  res.dims = {vol.dim(1), vol.dim(2), vol.dim(3)};
  const std::size_t n = res.dims[0] * res.dims[1] * res.dims[2];
  res.raw.assign(n, 0.0);
  {
    Tape tape;
    auto out = model::model_forward(vol, params);
    tape.backward(select(out.global_logits(), static_cast<std::size_t>(target_class)));
    for (const auto& b : out.branches) {
      const Tensor& act = options.post_attention ? b.attended : b.stage5;
      const std::vector<double> zeros(act.numel(), 0.0);
      auto grid = cam_from_activation(act, act.has_grad() ? act.grad() : std::span<const double>(zeros));
      std::array<std::size_t, 3> gd = {act.dim(1), act.dim(2), act.dim(3)};
      if (!options.post_attention) grid = realign_grid(grid, gd, b.plane, gd);
      std::array<std::size_t, 3> factors{};
      for (std::size_t i = 0; i < 3; ++i) factors[i] = res.dims[i] / gd[i];
      res.plane_cams.push_back(upsample_nearest(grid, gd, factors));
    }
  }
  for (auto& p : params.parameters()) {
    Tensor t = p;
    t.zero_grad();
  }
  for (const auto& pc : res.plane_cams) {
    for (std::size_t i = 0; i < n; ++i) res.raw[i] += pc[i];
  }
  for (auto& v : res.raw) v /= static_cast<double>(res.plane_cams.size());
  res.cam = normalize_cam(res.raw, &res.zero);
  return res;
}

}  // namespace mpk::interpret
