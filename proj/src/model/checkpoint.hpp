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

#include <filesystem>

#include "model/layers.hpp"
#include "model/model.hpp"

namespace mpk::model {

// "MPKC", u32 version, u32 tensor count, then per tensor: u32 name length,
// name bytes, u32 rank, rank x u32 dims, little-endian f64 values.
inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors);
NamedTensors load_tensors(const std::filesystem::path& path);

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params);
// Builds a model for `config` and fills it from the file. Missing, extra or
// misshapen tensors raise a FormatError naming the first offender.
ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& config);
// Copies values from `source` into the matching tensors of `target`.
void assign_parameters(ModelParams& target, const NamedTensors& source);

}  // namespace mpk::model
