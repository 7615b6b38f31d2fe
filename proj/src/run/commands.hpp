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
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "train/config.hpp"

// File-level commands shared by the C API and the command-line tool. Each
// command that has an output directory writes run_manifest.txt there before
// doing any work; `rerun` replays such a manifest.
namespace mpk::run {

using LogFn = std::function<void(const std::string&)>;

struct SynthArgs {
  std::filesystem::path spec;
  std::filesystem::path out;
  std::size_t n_per_class = 10;
};

struct ConfigOverrides {
  std::optional<std::string> planes;
  std::optional<std::string> attention;
  std::optional<int> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

struct TrainArgs {
  std::filesystem::path data;
  std::optional<std::filesystem::path> config;
  std::vector<std::filesystem::path> transfer;
  std::filesystem::path out;
  ConfigOverrides overrides;
};

struct EvalArgs {
  std::filesystem::path ckpt;
  std::filesystem::path data;
  std::optional<std::filesystem::path> config;
  std::optional<std::filesystem::path> out;
};

struct GradcamArgs {
  std::filesystem::path ckpt;
  std::filesystem::path data;
  std::filesystem::path atlas;
  std::optional<std::filesystem::path> config;
  std::filesystem::path out;
  std::size_t k = 20;
  int target = -1;  // -1: each subject's own label
  bool post_attention = false;
};

struct GradcheckArgs {
  std::string scale = "tiny";
  std::uint64_t seed = 0;
  std::optional<std::string> fault_op;
  double fault_factor = 1.5;
  std::optional<std::filesystem::path> report;
};

// Resolves the training configuration: file (or defaults) plus overrides.
train::TrainConfig resolve_config(const std::optional<std::filesystem::path>& path, const ConfigOverrides& o);

void cmd_synth(const SynthArgs& args, const LogFn& log);
// Returns the mean metrics table text that was written to metrics.tsv.
std::string cmd_train(const TrainArgs& args, const LogFn& log);
std::string cmd_eval(const EvalArgs& args, const LogFn& log);
void cmd_gradcam(const GradcamArgs& args, const LogFn& log);
// True when every suite passed. The report text goes to `log` and, when
// requested, to the report file.
bool cmd_gradcheck(const GradcheckArgs& args, const LogFn& log);

// Replays the command recorded in a run manifest. `out` overrides the
// recorded output directory. Returns false only for a failed gradcheck.
bool cmd_rerun(const std::filesystem::path& manifest, const std::optional<std::filesystem::path>& out,
               const LogFn& log);

inline constexpr const char* kManifestName = "run_manifest.txt";

}  // namespace mpk::run
