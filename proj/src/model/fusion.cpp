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

#include "model/fusion.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"

namespace mpk::model {

namespace {

constexpr std::array<std::string_view, 3> kPlaneNames = {"axial", "coronal", "sagittal"};

std::vector<std::size_t> full_permutation(const std::array<std::size_t, 3>& spatial) {
  return {0, spatial[0] + 1, spatial[1] + 1, spatial[2] + 1};
}

}  // namespace

std::string_view plane_name(Plane p) { return kPlaneNames[static_cast<std::size_t>(p)]; }

Plane parse_plane(std::string_view name) {
  for (std::size_t i = 0; i < kPlaneNames.size(); ++i) {
    if (kPlaneNames[i] == name) return static_cast<Plane>(i);
  }
  throw ConfigError("unknown plane '" + std::string(name) + "' (expected axial, coronal or sagittal)");
}

std::vector<Plane> parse_planes(std::string_view list) {
  std::vector<Plane> planes;
  std::size_t pos = 0;
  while (pos <= list.size()) {
    const std::size_t comma = std::min(list.find(',', pos), list.size());
    std::string_view item = list.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    const Plane p = parse_plane(item);
    if (std::find(planes.begin(), planes.end(), p) != planes.end()) {
      throw ConfigError("plane '" + std::string(item) + "' listed twice");
    }
    planes.push_back(p);
    pos = comma + 1;
  }
  std::sort(planes.begin(), planes.end());
  return planes;
}

std::string planes_str(std::span<const Plane> planes) {
  std::string s;
  for (auto p : planes) {
    if (!s.empty()) s += ',';
    s += plane_name(p);
  }
  return s;
}

std::array<std::size_t, 3> plane_permutation(Plane p) {
  switch (p) {
    case Plane::kAxial:
      return {0, 1, 2};
    case Plane::kCoronal:
      return {1, 0, 2};
    case Plane::kSagittal:
      return {2, 1, 0};
  }
  throw ConfigError("invalid plane tag");
}

std::array<std::size_t, 3> plane_inverse(Plane p) {
  const auto perm = plane_permutation(p);
  std::array<std::size_t, 3> inv{};
  for (std::size_t i = 0; i < 3; ++i) inv[perm[i]] = i;
  return inv;
}

Tensor reorient(const Tensor& vol, Plane p) {
  if (vol.rank() != 4) throw ShapeError("reorient: expected [C,D,H,W], got " + shape_str(vol.shape()));
  if (p == Plane::kAxial) return vol;
  return permute_axes(vol, full_permutation(plane_permutation(p)));
}

Tensor realign(const Tensor& fm, Plane p) {
  if (fm.rank() != 4) throw ShapeError("realign: expected [C,D,H,W], got " + shape_str(fm.shape()));
  if (p == Plane::kAxial) return fm;
  return permute_axes(fm, full_permutation(plane_inverse(p)));
}

Tensor fuse(std::span<const Tensor> maps) {
  if (maps.empty()) throw ConfigError("fuse: no active planes");
  Tensor out = maps[0];
  for (std::size_t i = 1; i < maps.size(); ++i) {
    if (maps[i].shape() != out.shape()) {
      throw ShapeError("fuse: map " + std::to_string(i) + " has shape " + shape_str(maps[i].shape()) +
                       ", expected " + shape_str(out.shape()));
    }
    out = add(out, maps[i]);
  }
  return out;
}

HeadParams head_init(std::size_t channels, std::size_t hidden, std::uint64_t seed) {
  if (channels == 0 || hidden == 0) throw ConfigError("head widths must be positive");
  Rng rng(seed);
  const double c = static_cast<double>(channels), d = static_cast<double>(hidden);
  HeadParams p;
  p.w = Tensor::uniform({hidden, channels}, -1.0 / std::sqrt(c), 1.0 / std::sqrt(c), rng);
  p.v = Tensor::uniform({1, hidden}, -1.0 / std::sqrt(d), 1.0 / std::sqrt(d), rng);
  p.psi = Tensor::uniform({channels, kNumClasses}, -1.0 / std::sqrt(c), 1.0 / std::sqrt(c), rng);
  for (auto* t : {&p.w, &p.v, &p.psi}) t->set_requires_grad(true);
  return p;
}

HeadOutput head_forward(const Tensor& f_total, const HeadParams& params) {
  if (f_total.rank() != 2) throw ShapeError("head_forward: expected [C,N], got " + shape_str(f_total.shape()));
  const std::size_t c = f_total.dim(0), n = f_total.dim(1);
  if (params.w.dim(1) != c || params.psi.dim(0) != c) {
    throw ShapeError("head_forward: head expects " + std::to_string(params.w.dim(1)) + " channels, got " +
                     std::to_string(c));
  }
  Tensor hidden = relu(matmul(params.w, f_total));  // [d, N]
  Tensor m = sigmoid(matmul(params.v, hidden));     // [1, N]
  Tensor weighted = mul(broadcast_to(m, {c, n}), f_total);
  Tensor alpha = matmul(permute_axes(weighted, {1, 0}), params.psi);  // [N, 2]
  HeadOutput out;
  out.patch_weights = reshape(m, {n});
  out.patch_logits = alpha;
  out.global_logits = mean_over(alpha, {0});
  out.f_total = f_total;
  return out;
}

}  // namespace mpk::model
