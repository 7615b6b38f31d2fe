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
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "model/model.hpp"
#include "train/loss.hpp"

namespace mpk::train {

// Line-oriented "key = value" text with [section] headers. '#' and ';'
// start comments. Errors carry the source name and line number.
struct IniEntry {
  std::string section;
  std::string key;
  std::string value;
  int line = 0;
};

std::vector<IniEntry> parse_ini(std::string_view text, std::string_view source);
std::string read_text_file(const std::filesystem::path& path);

// Typed value readers; `where` is prefixed to error messages.
long long parse_int(std::string_view value, const std::string& where);
double parse_double(std::string_view value, const std::string& where);
bool parse_bool(std::string_view value, const std::string& where);
std::string format_double(double v);

struct AugmentConfig {
  bool enabled = true;
  // Max shift per axis is ceil(extent * translate_fraction).
  double translate_fraction = 1.0 / 40.0;
  bool flip = true;
  double flip_probability = 0.5;
};

struct TrainConfig {
  int epochs = 100;
  std::size_t batch_size = 3;
  double lr = 0.005;
  double transfer_lr = 0.001;
  double lr_decay = 0.5;
  int lr_decay_every = 20;
  double momentum = 0.0;
  std::uint64_t seed = 0;
  std::size_t folds = 5;
  // Share of each training split held out for checkpoint selection; 0
  // keeps the last epoch.
  double val_fraction = 0.0;
  std::size_t threads = 1;
  // Center-crop target (D, H, W); zeros keep the stored dims.
  std::array<std::size_t, 3> crop = {0, 0, 0};

  LossConfig loss;
  model::ModelConfig model;
  AugmentConfig augment;

  void validate() const;
};

TrainConfig parse_train_config(std::string_view text, std::string_view source);
TrainConfig load_train_config(const std::filesystem::path& path);
// Canonical text form; parse_train_config(to_ini(c)) reproduces c.
std::string to_ini(const TrainConfig& cfg);

// base * decay^floor((epoch - 1) / every), base = lr or transfer_lr.
double lr_at(int epoch, const TrainConfig& cfg, bool transfer = false);

}  // namespace mpk::train
