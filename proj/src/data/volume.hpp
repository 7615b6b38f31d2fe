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

#include "core/tensor.hpp"

namespace mpk::data {

// Group tags mirror the clinical cohorts; label 0/1 is what the model sees.
bool is_valid_group(std::string_view g);

struct Volume {
  std::string subject_id;
  Tensor voxels;  // [1, D, H, W]
  int label = 0;
  std::string group = "CN";

  std::array<std::size_t, 3> dims() const { return {voxels.dim(1), voxels.dim(2), voxels.dim(3)}; }
};

// VOX1: "VOX1", u32 version (1), u32 D, H, W, u8 label, 7 reserved bytes,
// then D*H*W little-endian f64 values in row-major order.
inline constexpr std::uint32_t kVolumeVersion = 1;
inline constexpr std::size_t kVolumeHeaderBytes = 28;
// Largest voxel count accepted from a header.
inline constexpr std::uint64_t kMaxVoxels = std::uint64_t{1} << 32;

void save_volume(const std::filesystem::path& path, const Tensor& voxels, int label);
void save_volume(const std::filesystem::path& path, const Volume& vol);
// The returned volume carries the file's label; subject_id and group are
// left for the caller (the manifest) to fill.
Volume load_volume(const std::filesystem::path& path);

struct ManifestEntry {
  std::string subject_id;
  std::filesystem::path path;  // as written in the manifest
  int label = 0;
  std::string group;
};

// Tab-separated, '#' comments. Paths resolve relative to the manifest.
std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest);
void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries);
// Loads every listed volume. A label disagreeing with the file's label
// byte is a DataError. Empty manifests are rejected.
std::vector<Volume> load_dataset(const std::filesystem::path& manifest);

// Center crop to `dims`; zeros keep the corresponding axis.
Volume center_crop(const Volume& vol, const std::array<std::size_t, 3>& dims);

}  // namespace mpk::data
