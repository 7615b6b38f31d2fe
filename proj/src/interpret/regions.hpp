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
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace mpk::interpret {

// Integer label map; 0 is background.
struct Atlas {
  std::array<std::size_t, 3> dims{};
  std::vector<int> labels;
  std::map<int, std::string> names;

  std::string name_of(int region) const;
};

// Reads a VOX1 volume whose values are non-negative integers. An optional
// sidecar "<atlas>.names" (region<TAB>name per line) supplies names.
Atlas load_atlas(const std::filesystem::path& path);
void save_atlas(const std::filesystem::path& path, const Atlas& atlas);
// 2x2x2 octant atlas, regions 1..8 in row-major octant order.
Atlas octant_atlas(const std::array<std::size_t, 3>& dims);

using RegionScores = std::map<int, double>;
using RankedRegions = std::vector<std::pair<int, double>>;

// Mean CAM per non-background region present in the atlas.
RegionScores region_aggregate(std::span<const double> cam, const std::array<std::size_t, 3>& dims, const Atlas& atlas);
// Descending by score, ties by ascending region; k is clamped to the count.
RankedRegions top_regions(const RegionScores& scores, std::size_t k = 20);

// Pearson correlation across subjects for each region pair. Entries
// involving a zero-variance region are absent.
using CorrelationMatrix = std::vector<std::vector<std::optional<double>>>;
CorrelationMatrix region_correlation(std::span<const RegionScores> subjects, std::span<const int> regions);
std::optional<double> pearson(std::span<const double> x, std::span<const double> y);

std::string region_scores_tsv(const RegionScores& scores, const Atlas& atlas);
std::string top_regions_tsv(const RankedRegions& ranked, const Atlas& atlas);
std::string correlation_tsv(const CorrelationMatrix& m, std::span<const int> regions);

}  // namespace mpk::interpret
