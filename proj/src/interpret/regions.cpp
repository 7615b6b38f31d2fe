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

#include "interpret/regions.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "core/error.hpp"
#include "data/volume.hpp"

namespace mpk::interpret {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

std::string Atlas::name_of(int region) const {
  auto it = names.find(region);
  return it == names.end() ? "region_" + std::to_string(region) : it->second;
}

Atlas load_atlas(const std::filesystem::path& path) {
  const auto vol = data::load_volume(path);
  Atlas a;
  a.dims = vol.dims();
  a.labels.reserve(vol.voxels.numel());
  for (double v : vol.voxels.data()) {
    if (!(v >= 0.0) || v != std::floor(v) || v > 1e9) {
      throw DataError(path.string() + ": atlas values must be non-negative integers");
    }
    a.labels.push_back(static_cast<int>(v));
  }
  auto names_path = path;
  names_path += ".names";
  if (std::ifstream in(names_path); in) {
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line.front() == '#') continue;
      const auto tab = line.find('\t');
      if (tab == std::string::npos) throw DataError(names_path.string() + ": expected region<TAB>name");
      a.names[std::stoi(line.substr(0, tab))] = line.substr(tab + 1);
    }
  }
  return a;
}

void save_atlas(const std::filesystem::path& path, const Atlas& atlas) {
  std::vector<double> v(atlas.labels.begin(), atlas.labels.end());
  data::save_volume(path, Tensor(Shape{1, atlas.dims[0], atlas.dims[1], atlas.dims[2]}, std::move(v)), 0);
  if (!atlas.names.empty()) {
    auto names_path = path;
    names_path += ".names";
    std::ofstream out(names_path, std::ios::trunc);
    for (const auto& [r, n] : atlas.names) out << r << '\t' << n << '\n';
  }
}

Atlas octant_atlas(const std::array<std::size_t, 3>& dims) {
  Atlas a;
  a.dims = dims;
  a.labels.resize(dims[0] * dims[1] * dims[2]);
  std::size_t i = 0;
  for (std::size_t d = 0; d < dims[0]; ++d) {
    for (std::size_t h = 0; h < dims[1]; ++h) {
      for (std::size_t w = 0; w < dims[2]; ++w, ++i) {
        const int od = d >= dims[0] / 2, oh = h >= dims[1] / 2, ow = w >= dims[2] / 2;
        a.labels[i] = 1 + od * 4 + oh * 2 + ow;
      }
    }
  }
  static const char* kNames[] = {"superior_anterior_left",  "superior_anterior_right", "superior_posterior_left",
                                 "superior_posterior_right", "inferior_anterior_left",  "inferior_anterior_right",
                                 "inferior_posterior_left",  "inferior_posterior_right"};
  for (int r = 1; r <= 8; ++r) a.names[r] = kNames[r - 1];
  return a;
}

RegionScores region_aggregate(std::span<const double> cam, const std::array<std::size_t, 3>& dims, const Atlas& atlas) {
  if (dims != atlas.dims || cam.size() != atlas.labels.size()) {
    throw ShapeError("region_aggregate: CAM dims " + std::to_string(dims[0]) + "x" + std::to_string(dims[1]) + "x" +
                     std::to_string(dims[2]) + " do not match atlas dims " + std::to_string(atlas.dims[0]) + "x" +
                     std::to_string(atlas.dims[1]) + "x" + std::to_string(atlas.dims[2]));
  }
  std::map<int, std::pair<double, std::size_t>> acc;
  for (std::size_t i = 0; i < cam.size(); ++i) {
    const int r = atlas.labels[i];
    if (r == 0) continue;
    auto& [sum, count] = acc[r];
    sum += cam[i];
    ++count;
  }
  RegionScores out;
  for (const auto& [r, sc] : acc) out[r] = sc.first / static_cast<double>(sc.second);
  return out;
}

RankedRegions top_regions(const RegionScores& scores, std::size_t k) {
  RankedRegions ranked(scores.begin(), scores.end());
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  ranked.resize(std::min(k, ranked.size()));
  return ranked;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.empty()) throw ShapeError("pearson: vectors differ in length");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

CorrelationMatrix region_correlation(std::span<const RegionScores> subjects, std::span<const int> regions) {
  if (subjects.size() < 3) {
    throw DataError("region_correlation: needs at least 3 subjects, got " + std::to_string(subjects.size()));
  }
  std::vector<std::vector<double>> series(regions.size(), std::vector<double>(subjects.size()));
  for (std::size_t r = 0; r < regions.size(); ++r) {
    for (std::size_t s = 0; s < subjects.size(); ++s) {
      auto it = subjects[s].find(regions[r]);
      if (it == subjects[s].end()) {
        throw DataError("region_correlation: subject " + std::to_string(s) + " has no score for region " +
                        std::to_string(regions[r]));
      }
      series[r][s] = it->second;
    }
  }
  CorrelationMatrix m(regions.size(), std::vector<std::optional<double>>(regions.size()));
  for (std::size_t i = 0; i < regions.size(); ++i) {
    for (std::size_t j = i; j < regions.size(); ++j) {
      auto v = pearson(series[i], series[j]);
      if (i == j && v) v = 1.0;
      m[i][j] = m[j][i] = v;
    }
  }
  return m;
}

std::string region_scores_tsv(const RegionScores& scores, const Atlas& atlas) {
  std::string out = "region\tname\tscore\n";
  for (const auto& [r, s] : scores) out += std::to_string(r) + "\t" + atlas.name_of(r) + "\t" + fmt(s) + "\n";
  return out;
}

std::string top_regions_tsv(const RankedRegions& ranked, const Atlas& atlas) {
  std::string out = "rank\tregion\tname\tscore\n";
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    out += std::to_string(i + 1) + "\t" + std::to_string(ranked[i].first) + "\t" + atlas.name_of(ranked[i].first) +
           "\t" + fmt(ranked[i].second) + "\n";
  }
  return out;
}

std::string correlation_tsv(const CorrelationMatrix& m, std::span<const int> regions) {
  std::string out = "region";
  for (int r : regions) out += "\t" + std::to_string(r);
  out += "\n";
  for (std::size_t i = 0; i < regions.size(); ++i) {
    out += std::to_string(regions[i]);
    for (std::size_t j = 0; j < regions.size(); ++j) out += "\t" + (m[i][j] ? fmt(*m[i][j]) : std::string("NA"));
    out += "\n";
  }
  return out;
}

}  // namespace mpk::interpret
