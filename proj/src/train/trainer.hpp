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
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "data/folds.hpp"
#include "data/volume.hpp"
#include "model/model.hpp"
#include "train/config.hpp"
#include "train/metrics.hpp"

namespace mpk::train {

struct EpochLog {
  int epoch = 0;
  double loss = 0.0;
  double lambda_eff = 0.0;
  double lr = 0.0;
};

// Return false to end training after this epoch.
using EpochCallback = std::function<bool(const EpochLog&, const model::ModelParams&)>;

struct TrainOptions {
  // Starting point; a fresh model is initialized when empty.
  std::optional<model::ModelParams> init;
  // Use transfer_lr instead of lr.
  bool transfer = false;
  EpochCallback on_epoch;
};

struct TrainResult {
  model::ModelParams params;
  std::vector<EpochLog> log;
  int selected_epoch = 0;
};

// Deep copy with fresh leaves.
model::ModelParams clone_params(const model::ModelParams& p);

// One sample's objective, (ce + lambda_eff * slc) for a single subject.
Tensor sample_loss(const model::ModelOutput& out, int label, int epoch, const LossConfig& cfg);

// Plain or momentum SGD over `epochs`, shuffling and augmenting per epoch.
// Gradients are accumulated per sample and averaged over the batch.
// A non-finite loss raises NumericError naming the epoch.
TrainResult train_fold(const std::vector<data::Volume>& train_set, const TrainConfig& cfg, std::uint64_t seed,
                       TrainOptions options = {});

// softmax(global_logits)[1] for each volume, no tape.
std::vector<double> predict(const model::ModelParams& params, const std::vector<data::Volume>& volumes);
// Mean cross-entropy of the given predictions.
double mean_ce(const std::vector<double>& probs, const std::vector<int>& labels);

struct FoldResult {
  std::size_t fold = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> test_ids;
  std::vector<double> scores;
  std::vector<int> labels;
  Metrics metrics;
  TrainResult training;
  // Index into the transfer candidates that won this fold, if any.
  std::optional<std::size_t> transfer_source;
};

struct CvResult {
  data::FoldPlan plan;
  std::vector<FoldResult> folds;
  Metrics mean;
};

struct CvOptions {
  std::vector<model::ModelParams> transfer_from;
  // Called once per finished fold (from the thread that trained it).
  std::function<void(const FoldResult&)> on_fold;
  // Forwarded to every training run; receives the fold index.
  std::function<bool(std::size_t, const EpochLog&, const model::ModelParams&)> on_epoch;
};

CvResult cross_validate(const std::vector<data::Volume>& dataset, const TrainConfig& cfg, const CvOptions& options = {});

}  // namespace mpk::train
