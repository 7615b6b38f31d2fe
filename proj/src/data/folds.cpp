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

#include "data/folds.hpp"

#include <algorithm>
#include <set>

#include "core/error.hpp"
#include "core/rng.hpp"

namespace mpk::data {

std::vector<std::size_t> FoldPlan::test_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] == fold) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> FoldPlan::train_indices(std::size_t fold) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < assignment.size(); ++i) {
    if (assignment[i] != fold) out.push_back(i);
  }
  return out;
}

FoldPlan make_folds(std::span<const int> labels, std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("make_folds: k must be at least 2");
  if (labels.size() < k) throw DataError("make_folds: fewer subjects than folds");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw DataError("make_folds: label must be 0 or 1");
  }
  FoldPlan plan;
  plan.k = k;
  plan.assignment.assign(labels.size(), 0);
  Rng rng(seed);
  std::size_t next = 0;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    if (members.size() < k) {
      throw DataError("make_folds: class " + std::to_string(cls) + " has " + std::to_string(members.size()) +
                      " subjects, fewer than k=" + std::to_string(k));
    }
    std::shuffle(members.begin(), members.end(), rng.engine());
    for (auto i : members) {
      plan.assignment[i] = next;
      next = (next + 1) % k;
    }
  }
  return plan;
}

void check_disjoint(std::span<const std::string> train_ids, std::span<const std::string> test_ids) {
  std::set<std::string> train(train_ids.begin(), train_ids.end());
  for (const auto& id : test_ids) {
    if (train.count(id)) throw DataError("fold leakage: subject '" + id + "' is in both train and test sets");
  }
}

}  // namespace mpk::data
