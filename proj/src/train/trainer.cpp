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

#include "train/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <numeric>
#include <thread>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "core/rng.hpp"
#include "data/augment.hpp"
#include "model/checkpoint.hpp"

namespace mpk::train {

namespace {

std::vector<int> labels_of(const std::vector<data::Volume>& v) {
  std::vector<int> out;
  for (const auto& x : v) out.push_back(x.label);
  return out;
}

// Stratified hold-out of roughly `fraction` of each class.
void split_validation(const std::vector<data::Volume>& all, double fraction, std::uint64_t seed,
                      std::vector<data::Volume>& train, std::vector<data::Volume>& val) {
  Rng rng(seed);
  for (int cls : {0, 1}) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (all[i].label == cls) idx.push_back(i);
    }
    std::shuffle(idx.begin(), idx.end(), rng.engine());
    auto n_val = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(idx.size())));
    if (idx.size() > 1) n_val = std::clamp<std::size_t>(n_val, 1, idx.size() - 1);
    else n_val = 0;
    std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_val));
    std::sort(idx.begin() + static_cast<std::ptrdiff_t>(n_val), idx.end());
    for (std::size_t j = 0; j < idx.size(); ++j) (j < n_val ? val : train).push_back(all[idx[j]]);
  }
}

double accuracy(const std::vector<double>& probs, const std::vector<int>& labels) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < probs.size(); ++i) ok += (probs[i] > 0.5) == (labels[i] == 1);
  return static_cast<double>(ok) / static_cast<double>(std::max<std::size_t>(probs.size(), 1));
}

}  // namespace

model::ModelParams clone_params(const model::ModelParams& p) {
  model::ModelParams out = model::model_init(p.config, 0);
  model::assign_parameters(out, p.named_parameters());
  return out;
}

Tensor sample_loss(const model::ModelOutput& out, int label, int epoch, const LossConfig& cfg) {
  const Tensor logits[] = {out.global_logits()};
  const int labels[] = {label};
  Tensor ce = ce_loss(logits, labels);
  if (lambda_effective(epoch, cfg) == 0.0) return ce;
  Tensor slc = slc_loss(out.head.patch_weights, out.head.patch_logits, label);
  return total_loss(ce, slc, epoch, cfg);
}

TrainResult train_fold(const std::vector<data::Volume>& train_set, const TrainConfig& cfg, std::uint64_t seed,
                       TrainOptions options) {
  cfg.validate();
  if (train_set.empty()) throw DataError("train_fold: empty training set");

  std::vector<data::Volume> train, val;
  if (cfg.val_fraction > 0.0) {
    split_validation(train_set, cfg.val_fraction, Rng::derive(seed, 1), train, val);
  } else {
    train = train_set;
  }
  if (train.empty()) throw DataError("train_fold: validation split left no training subjects");

  TrainResult result;
  result.params = options.init ? clone_params(*options.init) : model::model_init(cfg.model, Rng::derive(seed, 0));
  auto params = result.params.parameters();
  std::vector<std::vector<double>> velocity(params.size());
  if (cfg.momentum > 0.0) {
    for (std::size_t i = 0; i < params.size(); ++i) velocity[i].assign(params[i].numel(), 0.0);
  }

  std::optional<model::ModelParams> best;
  double best_acc = -1.0, best_loss = 0.0;
  const auto val_labels = labels_of(val);
  const data::AugmentOptions aug{cfg.augment.translate_fraction, cfg.augment.flip, cfg.augment.flip_probability};

  std::vector<std::size_t> order(train.size());
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(Rng::derive(seed, 1000 + static_cast<std::uint64_t>(epoch)));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng.engine());
    const double lr = lr_at(epoch, cfg, options.transfer);
    const double lam = lambda_effective(epoch, cfg.loss);
    double loss_sum = 0.0;

    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const double inv_batch = 1.0 / static_cast<double>(end - start);
      for (auto& p : params) p.zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const data::Volume& src = train[order[b]];
        const data::Volume sample = cfg.augment.enabled ? data::augment(src, aug, rng) : src;
        Tape tape;
        Tensor loss;
        try {
          loss = sample_loss(model::model_forward(sample.voxels, result.params), sample.label, epoch, cfg.loss);
        } catch (const NumericError& e) {
          throw NumericError("training diverged at epoch " + std::to_string(epoch) + " on subject '" +
                             sample.subject_id + "': " + e.what());
        }
        const double value = loss.item();
        if (!std::isfinite(value)) {
          throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": loss is " + std::to_string(value) +
                             " for subject '" + sample.subject_id + "'");
        }
        loss_sum += value;
        tape.backward(scale(loss, inv_batch));
      }
      for (std::size_t i = 0; i < params.size(); ++i) {
        if (!params[i].has_grad()) continue;
        auto g = params[i].grad();
        auto w = params[i].mutable_data();
        if (cfg.momentum > 0.0) {
          auto& v = velocity[i];
          for (std::size_t j = 0; j < w.size(); ++j) {
            v[j] = cfg.momentum * v[j] + g[j];
            w[j] -= lr * v[j];
          }
        } else {
          for (std::size_t j = 0; j < w.size(); ++j) w[j] -= lr * g[j];
        }
        if (!all_finite(w)) throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": non-finite parameters");
      }
    }
    for (auto& p : params) p.zero_grad();

    EpochLog entry{epoch, loss_sum / static_cast<double>(train.size()), lam, lr};
    result.log.push_back(entry);

    if (!val.empty()) {
      const auto probs = predict(result.params, val);
      const double acc = accuracy(probs, val_labels), loss = mean_ce(probs, val_labels);
      if (acc > best_acc || (acc == best_acc && loss < best_loss)) {
        best_acc = acc;
        best_loss = loss;
        best = clone_params(result.params);
        result.selected_epoch = epoch;
      }
    } else {
      result.selected_epoch = epoch;
    }
    if (options.on_epoch && !options.on_epoch(entry, result.params)) break;
  }
  if (best) result.params = std::move(*best);
  return result;
}

std::vector<double> predict(const model::ModelParams& params, const std::vector<data::Volume>& volumes) {
  NoGradGuard guard;
  std::vector<double> out;
  out.reserve(volumes.size());
  for (const auto& v : volumes) out.push_back(model::positive_probability(model::model_forward(v.voxels, params)));
  return out;
}

double mean_ce(const std::vector<double>& probs, const std::vector<int>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const double p = std::clamp(probs[i], kProbabilityClamp, 1.0 - kProbabilityClamp);
    s -= labels[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  return probs.empty() ? 0.0 : s / static_cast<double>(probs.size());
}

CvResult cross_validate(const std::vector<data::Volume>& dataset, const TrainConfig& cfg, const CvOptions& options) {
  cfg.validate();
  CvResult cv;
  const auto labels = labels_of(dataset);
  cv.plan = data::make_folds(labels, cfg.folds, cfg.seed);
  cv.folds.resize(cfg.folds);

  auto run_fold = [&](std::size_t fold) {
    FoldResult fr;
    fr.fold = fold;
    std::vector<data::Volume> train, test;
    for (auto i : cv.plan.train_indices(fold)) {
      train.push_back(dataset[i]);
      fr.train_ids.push_back(dataset[i].subject_id);
    }
    for (auto i : cv.plan.test_indices(fold)) {
      test.push_back(dataset[i]);
      fr.test_ids.push_back(dataset[i].subject_id);
      fr.labels.push_back(dataset[i].label);
    }
    data::check_disjoint(fr.train_ids, fr.test_ids);

    const std::uint64_t seed = Rng::derive(cfg.seed, 100 + fold);
    auto make_options = [&] {
      TrainOptions o;
      if (options.on_epoch) {
        o.on_epoch = [&, fold](const EpochLog& e, const model::ModelParams& p) { return options.on_epoch(fold, e, p); };
      }
      return o;
    };
    if (options.transfer_from.empty()) {
      fr.training = train_fold(train, cfg, seed, make_options());
      fr.scores = predict(fr.training.params, test);
      fr.metrics = compute_metrics(fr.scores, fr.labels);
    } else {
      for (std::size_t c = 0; c < options.transfer_from.size(); ++c) {
        TrainOptions o = make_options();
        o.init = options.transfer_from[c];
        o.transfer = true;
        TrainResult tr = train_fold(train, cfg, seed, std::move(o));
        auto scores = predict(tr.params, test);
        Metrics m = compute_metrics(scores, fr.labels);
        if (!fr.transfer_source || m.acc.value_or(0.0) > fr.metrics.acc.value_or(0.0)) {
          fr.transfer_source = c;
          fr.training = std::move(tr);
          fr.scores = std::move(scores);
          fr.metrics = m;
        }
      }
    }
    if (options.on_fold) options.on_fold(fr);
    cv.folds[fold] = std::move(fr);
  };

  const std::size_t workers = std::min(cfg.threads, cfg.folds);
  if (workers <= 1) {
    for (std::size_t f = 0; f < cfg.folds; ++f) run_fold(f);
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < workers; ++t) {
      pool.emplace_back([&] {
        for (std::size_t f = next++; f < cfg.folds; f = next++) {
          try {
            run_fold(f);
          } catch (...) {
            std::lock_guard lock(err_mu);
            if (!first_error) first_error = std::current_exception();
          }
        }
      });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
  }

  std::vector<Metrics> per_fold;
  for (const auto& f : cv.folds) per_fold.push_back(f.metrics);
  cv.mean = mean_metrics(per_fold);
  return cv;
}

}  // namespace mpk::train
