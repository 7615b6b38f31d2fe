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
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mpk::train {

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  std::size_t total() const { return tp + tn + fp + fn; }
};

// Absent entries mark an undefined denominator (or a single-class AUC).
struct Metrics {
  std::optional<double> acc, sen, spe, f1, auc;
  Confusion counts;
};

// Predicted class is 1 when score > 0.5.
Confusion confusion(std::span<const double> scores, std::span<const int> labels);
Metrics metrics_from_confusion(const Confusion& c);
// Rank-statistic AUC over all (positive, negative) pairs, ties count 1/2.
std::optional<double> auc(std::span<const double> scores, std::span<const int> labels);
Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels);
// Per-field arithmetic mean over the folds where the field is present.
Metrics mean_metrics(std::span<const Metrics> folds);

std::string format_metric(const std::optional<double>& v);
// "fold\tacc\tsen\tspe\tf1\tauc" header, one row per fold, then "mean".
std::string metrics_table(std::span<const Metrics> folds, bool with_mean = true);

}  // namespace mpk::train
