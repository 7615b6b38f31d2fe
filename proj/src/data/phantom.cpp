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

#include "data/phantom.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "train/config.hpp"

namespace mpk::data {

namespace {

std::array<double, 3> parse_triple(std::string_view v, const std::string& where) {
  std::array<double, 3> out{};
  std::size_t pos = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t comma = i < 2 ? v.find(',', pos) : v.size();
    if (comma == std::string_view::npos) throw ConfigError(where + ": expected three comma-separated values");
    std::string_view item = v.substr(pos, comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    out[i] = train::parse_double(item, where);
    pos = comma + 1;
  }
  return out;
}

std::string triple_str(const std::array<double, 3>& t) {
  return train::format_double(t[0]) + "," + train::format_double(t[1]) + "," + train::format_double(t[2]);
}

}  // namespace

void PhantomSpec::validate() const {
  for (auto d : dims) {
    if (d == 0) throw ConfigError("phantom dims must be positive");
  }
  if (!(lesion_radius > 0.0)) throw ConfigError("phantom lesion_radius must be positive");
  if (!(noise_sigma >= 0.0) || !(lesion_jitter >= 0.0) || !(background_amplitude >= 0.0)) {
    throw ConfigError("phantom noise_sigma, lesion_jitter and background_amplitude must be >= 0");
  }
  static const char* kAxes[] = {"D", "H", "W"};
  for (std::size_t i = 0; i < 3; ++i) {
    const double reach = lesion_radius + lesion_jitter;
    if (lesion_center[i] - reach < 0.0 || lesion_center[i] + reach > static_cast<double>(dims[i] - 1)) {
      throw ConfigError(std::string("phantom lesion (center ") + triple_str(lesion_center) + ", radius " +
                        train::format_double(lesion_radius) + ", jitter " + train::format_double(lesion_jitter) +
                        ") leaves the volume along axis " + kAxes[i]);
    }
  }
  if (!is_valid_group(group0) || !is_valid_group(group1)) throw ConfigError("phantom groups must be CN, AD, sMCI or pMCI");
}

PhantomSpec parse_phantom_spec(std::string_view text, std::string_view source) {
  PhantomSpec s;
  for (const auto& e : train::parse_ini(text, source)) {
    const std::string where = std::string(source) + ":" + std::to_string(e.line) + ": [" + e.section + "] " + e.key;
    if (e.section != "phantom") {
      throw ConfigError(std::string(source) + ":" + std::to_string(e.line) + ": unknown section [" + e.section + "]");
    }
    if (e.key == "dims") {
      auto t = parse_triple(e.value, where);
      for (std::size_t i = 0; i < 3; ++i) {
        if (t[i] < 1 || t[i] != std::floor(t[i])) throw ConfigError(where + ": dims must be positive integers");
        s.dims[i] = static_cast<std::size_t>(t[i]);
      }
    } else if (e.key == "lesion_center") {
      s.lesion_center = parse_triple(e.value, where);
    } else if (e.key == "lesion_radius") {
      s.lesion_radius = train::parse_double(e.value, where);
    } else if (e.key == "lesion_delta") {
      s.lesion_delta = train::parse_double(e.value, where);
    } else if (e.key == "lesion_jitter") {
      s.lesion_jitter = train::parse_double(e.value, where);
    } else if (e.key == "noise_sigma") {
      s.noise_sigma = train::parse_double(e.value, where);
    } else if (e.key == "background_amplitude") {
      s.background_amplitude = train::parse_double(e.value, where);
    } else if (e.key == "seed") {
      const auto v = train::parse_int(e.value, where);
      if (v < 0) throw ConfigError(where + ": seed must be non-negative");
      s.seed = static_cast<std::uint64_t>(v);
    } else if (e.key == "group0") {
      s.group0 = e.value;
    } else if (e.key == "group1") {
      s.group1 = e.value;
    } else {
      throw ConfigError(where + ": unknown key");
    }
  }
  s.validate();
  return s;
}

PhantomSpec load_phantom_spec(const std::filesystem::path& path) {
  return parse_phantom_spec(train::read_text_file(path), path.string());
}

std::string to_ini(const PhantomSpec& s) {
  std::ostringstream o;
  o << "[phantom]\n"
    << "dims = " << s.dims[0] << "," << s.dims[1] << "," << s.dims[2] << "\n"
    << "lesion_center = " << triple_str(s.lesion_center) << "\n"
    << "lesion_radius = " << train::format_double(s.lesion_radius) << "\n"
    << "lesion_delta = " << train::format_double(s.lesion_delta) << "\n"
    << "lesion_jitter = " << train::format_double(s.lesion_jitter) << "\n"
    << "noise_sigma = " << train::format_double(s.noise_sigma) << "\n"
    << "background_amplitude = " << train::format_double(s.background_amplitude) << "\n"
    << "seed = " << s.seed << "\n"
    << "group0 = " << s.group0 << "\n"
    << "group1 = " << s.group1 << "\n";
  return o.str();
}

std::array<double, 3> lesion_center_for(const PhantomSpec& spec, std::size_t index) {
  Rng rng(Rng::derive(spec.seed, 3'000'000 + index));
  std::array<double, 3> c = spec.lesion_center;
  if (spec.lesion_jitter > 0.0) {
    for (auto& x : c) x += rng.uniform(-spec.lesion_jitter, spec.lesion_jitter);
  }
  return c;
}

std::vector<unsigned char> sphere_mask(const std::array<std::size_t, 3>& dims, const std::array<double, 3>& center,
                                       double radius) {
  std::vector<unsigned char> mask(dims[0] * dims[1] * dims[2], 0);
  const double r2 = radius * radius;
  std::size_t i = 0;
  for (std::size_t d = 0; d < dims[0]; ++d) {
    for (std::size_t h = 0; h < dims[1]; ++h) {
      for (std::size_t w = 0; w < dims[2]; ++w, ++i) {
        const double dd = static_cast<double>(d) - center[0], dh = static_cast<double>(h) - center[1],
                     dw = static_cast<double>(w) - center[2];
        mask[i] = dd * dd + dh * dh + dw * dw <= r2 ? 1 : 0;
      }
    }
  }
  return mask;
}

std::vector<Volume> generate_phantoms(const PhantomSpec& spec, std::size_t n_per_class) {
  spec.validate();
  if (n_per_class < 1) throw ConfigError("generate_phantoms: need at least one subject per class");
  const auto& dims = spec.dims;
  const std::size_t n = dims[0] * dims[1] * dims[2];
  std::vector<Volume> out(2 * n_per_class);

  for (std::size_t i = 0; i < n_per_class; ++i) {
    // Shared background for the pair: ellipsoid plus a few low-frequency waves.
    Rng bg(Rng::derive(spec.seed, 1'000'000 + i));
    std::array<std::array<double, 4>, 3> waves{};
    for (auto& wv : waves) {
      wv = {bg.uniform(-1.0, 1.0), bg.uniform(-1.0, 1.0), bg.uniform(-1.0, 1.0), bg.uniform(0.0, 2.0 * std::numbers::pi)};
    }
    std::vector<double> background(n);
    std::size_t idx = 0;
    for (std::size_t d = 0; d < dims[0]; ++d) {
      for (std::size_t h = 0; h < dims[1]; ++h) {
        for (std::size_t w = 0; w < dims[2]; ++w, ++idx) {
          const double u = (static_cast<double>(d) + 0.5) / static_cast<double>(dims[0]) * 2.0 - 1.0;
          const double v = (static_cast<double>(h) + 0.5) / static_cast<double>(dims[1]) * 2.0 - 1.0;
          const double x = (static_cast<double>(w) + 0.5) / static_cast<double>(dims[2]) * 2.0 - 1.0;
          const bool inside = u * u + v * v + x * x <= 1.0;
          double mod = 0.0;
          for (const auto& wv : waves) mod += std::sin(std::numbers::pi * (wv[0] * u + wv[1] * v + wv[2] * x) + wv[3]);
          background[idx] = inside ? 1.0 + spec.background_amplitude * mod / 3.0 : 0.0;
        }
      }
    }
    for (int label = 0; label < 2; ++label) {
      Rng noise(Rng::derive(spec.seed, 2'000'000 + 2 * i + static_cast<std::size_t>(label)));
      std::vector<double> v = background;
      if (spec.noise_sigma > 0.0) {
        for (auto& x : v) x += noise.normal(0.0, spec.noise_sigma);
      }
      if (label == 1 && spec.lesion_delta != 0.0) {
        const auto mask = sphere_mask(dims, lesion_center_for(spec, i), spec.lesion_radius);
        for (std::size_t k = 0; k < n; ++k) {
          if (mask[k]) v[k] -= spec.lesion_delta;
        }
      }
      Volume vol;
      char id[32];
      std::snprintf(id, sizeof id, "%s_%03zu", label == 0 ? "c0" : "c1", i);
      vol.subject_id = id;
      vol.label = label;
      vol.group = label == 0 ? spec.group0 : spec.group1;
      vol.voxels = Tensor(Shape{1, dims[0], dims[1], dims[2]}, std::move(v));
      out[static_cast<std::size_t>(label) * n_per_class + i] = std::move(vol);
    }
  }
  return out;
}

}  // namespace mpk::data
