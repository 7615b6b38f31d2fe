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

#include "train/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>

#include "core/error.hpp"

namespace mpk::train {

namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

void check_sizes(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ShapeError("metrics: scores and labels differ in length");
  for (int y : labels) {
    if (y != 0 && y != 1) throw DataError("metrics: label " + std::to_string(y) + " is not 0 or 1");
  }
}

}  // namespace

Confusion confusion(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  Confusion c;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pred = scores[i] > 0.5;
    if (labels[i] == 1) {
      pred ? ++c.tp : ++c.fn;
    } else {
      pred ? ++c.fp : ++c.tn;
    }
  }
  return c;
}

Metrics metrics_from_confusion(const Confusion& c) {
  Metrics m;
  m.counts = c;
  m.acc = ratio(c.tp + c.tn, c.total());
  m.sen = ratio(c.tp, c.tp + c.fn);
  m.spe = ratio(c.tn, c.tn + c.fp);
  m.f1 = ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn);
  return m;
}

std::optional<double> auc(std::span<const double> scores, std::span<const int> labels) {
  check_sizes(scores, labels);
  // Sort once and credit each positive with the negatives ranked below it;
  // equal-score blocks contribute half of their cross pairs.
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return scores[a] < scores[b]; });
  double credit = 0.0;
  std::size_t neg_below = 0, pos = 0, neg = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i, p = 0, n = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      labels[order[j]] == 1 ? ++p : ++n;
      ++j;
    }
    credit += static_cast<double>(p) * (static_cast<double>(neg_below) + 0.5 * static_cast<double>(n));
    neg_below += n;
    pos += p;
    neg += n;
    i = j;
  }
  if (pos == 0 || neg == 0) return std::nullopt;
  return credit / (static_cast<double>(pos) * static_cast<double>(neg));
}

Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels) {
  Metrics m = metrics_from_confusion(confusion(scores, labels));
  m.auc = auc(scores, labels);
  return m;
}

Metrics mean_metrics(std::span<const Metrics> folds) {
  auto avg = [&](std::optional<double> Metrics::*field) -> std::optional<double> {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& f : folds) {
      if (f.*field) {
        sum += *(f.*field);
        ++n;
      }
    }
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  };
  Metrics m;
  m.acc = avg(&Metrics::acc);
  m.sen = avg(&Metrics::sen);
  m.spe = avg(&Metrics::spe);
  m.f1 = avg(&Metrics::f1);
  m.auc = avg(&Metrics::auc);
  for (const auto& f : folds) {
    m.counts.tp += f.counts.tp;
    m.counts.tn += f.counts.tn;
    m.counts.fp += f.counts.fp;
    m.counts.fn += f.counts.fn;
  }
  return m;
}

std::string format_metric(const std::optional<double>& v) {
  if (!v) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", *v);
  return buf;
}

std::string metrics_table(std::span<const Metrics> folds, bool with_mean) {
  std::string out = "fold\tacc\tsen\tspe\tf1\tauc\n";
  auto row = [&](const std::string& name, const Metrics& m) {
    out += name + "\t" + format_metric(m.acc) + "\t" + format_metric(m.sen) + "\t" + format_metric(m.spe) + "\t" +
           format_metric(m.f1) + "\t" + format_metric(m.auc) + "\n";
  };
  for (std::size_t i = 0; i < folds.size(); ++i) row(std::to_string(i), folds[i]);
  if (with_mean && !folds.empty()) row("mean", mean_metrics(folds));
  return out;
}

}  // namespace mpk::train
