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

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mpk::data {

struct FoldPlan {
  std::size_t k = 5;
  std::vector<std::size_t> assignment;  // subject index -> fold

  std::vector<std::size_t> test_indices(std::size_t fold) const;
  std::vector<std::size_t> train_indices(std::size_t fold) const;
};

// Stratified by label: each class is shuffled and dealt round-robin, the
// second class continuing where the first stopped, so fold sizes differ by
// at most one. A class with fewer than k subjects is rejected.
FoldPlan make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed);

// Throws DataError when a train and a test subject id coincide.
void check_disjoint(std::span<const std::string> train_ids, std::span<const std::string> test_ids);

}  // namespace mpk::data
