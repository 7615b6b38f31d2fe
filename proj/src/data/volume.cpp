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

#include "data/volume.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <set>

#include "core/error.hpp"
#include "core/ops.hpp"
#include "data/binary_io.hpp"

namespace mpk::data {

namespace {

constexpr char kMagic[4] = {'V', 'O', 'X', '1'};

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const std::size_t tab = line.find('\t', pos);
    out.push_back(line.substr(pos, tab == std::string_view::npos ? std::string_view::npos : tab - pos));
    if (tab == std::string_view::npos) break;
    pos = tab + 1;
  }
  return out;
}

}  // namespace

bool is_valid_group(std::string_view g) { return g == "CN" || g == "AD" || g == "sMCI" || g == "pMCI"; }

void save_volume(const std::filesystem::path& path, const Tensor& voxels, int label) {
  if (voxels.rank() != 4 || voxels.dim(0) != 1) {
    throw ShapeError("save_volume: expected [1,D,H,W], got " + shape_str(voxels.shape()));
  }
  if (label < 0 || label > 255) throw DataError("save_volume: label must fit in a byte");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  io::write_u32(out, kVolumeVersion);
  for (std::size_t i = 1; i < 4; ++i) io::write_u32(out, static_cast<std::uint32_t>(voxels.dim(i)));
  const char tail[8] = {static_cast<char>(label), 0, 0, 0, 0, 0, 0, 0};
  out.write(tail, 8);
  io::write_f64s(out, voxels.data());
  if (!out) throw IoError("write failed for " + path.string());
}

void save_volume(const std::filesystem::path& path, const Volume& vol) { save_volume(path, vol.voxels, vol.label); }

Volume load_volume(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open volume " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || !std::equal(magic, magic + 4, kMagic)) {
    throw FormatError(path.string() + ": bad volume magic '" + io::printable(magic, static_cast<std::size_t>(in.gcount())) +
                      "', expected 'VOX1'");
  }
  const auto version = io::read_u32(in, path);
  if (version != kVolumeVersion) throw FormatError(path.string() + ": unsupported volume version " + std::to_string(version));
  std::array<std::uint64_t, 3> dims{};
  for (auto& d : dims) {
    d = io::read_u32(in, path);
    if (d == 0) throw FormatError(path.string() + ": zero-sized volume axis");
  }
  char tail[8];
  in.read(tail, 8);
  if (in.gcount() != 8) throw TruncatedError(path.string() + ": truncated volume header");
  if (dims[0] > kMaxVoxels / dims[1] || dims[0] * dims[1] > kMaxVoxels / dims[2]) {
    throw OverflowError(path.string() + ": header dims " + std::to_string(dims[0]) + "x" + std::to_string(dims[1]) + "x" +
                        std::to_string(dims[2]) + " exceed the supported voxel count");
  }
  const std::uint64_t numel = dims[0] * dims[1] * dims[2];
  // Payload must match the header exactly.
  in.seekg(0, std::ios::end);
  const auto file_size = static_cast<std::uint64_t>(in.tellg());
  const std::uint64_t expected = kVolumeHeaderBytes + numel * 8;
  if (file_size != expected) {
    throw TruncatedError(path.string() + ": payload is " + std::to_string(file_size - kVolumeHeaderBytes) +
                         " bytes but header dims require " + std::to_string(numel * 8));
  }
  in.seekg(static_cast<std::streamoff>(kVolumeHeaderBytes));
  std::vector<double> values(numel);
  io::read_f64s(in, values, path);
  Volume v;
  v.voxels = Tensor(Shape{1, dims[0], dims[1], dims[2]}, std::move(values));
  v.label = static_cast<unsigned char>(tail[0]);
  v.subject_id = path.stem().string();
  return v;
}

std::vector<ManifestEntry> read_manifest(const std::filesystem::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw IoError("cannot open manifest " + manifest.string());
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    const std::string loc = manifest.string() + ":" + std::to_string(line_no);
    auto fields = split_tabs(line);
    if (fields.size() != 4) throw DataError(loc + ": expected 4 tab-separated fields, got " + std::to_string(fields.size()));
    ManifestEntry e;
    e.subject_id = std::string(fields[0]);
    e.path = std::string(fields[1]);
    if (fields[2] == "0") {
      e.label = 0;
    } else if (fields[2] == "1") {
      e.label = 1;
    } else {
      throw DataError(loc + ": label must be 0 or 1, got '" + std::string(fields[2]) + "'");
    }
    e.group = std::string(fields[3]);
    if (e.subject_id.empty()) throw DataError(loc + ": empty subject id");
    if (!is_valid_group(e.group)) throw DataError(loc + ": unknown group '" + e.group + "'");
    if (!seen.insert(e.subject_id).second) throw DataError(loc + ": duplicate subject id '" + e.subject_id + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

void write_manifest(const std::filesystem::path& manifest, const std::vector<ManifestEntry>& entries) {
  std::ofstream out(manifest, std::ios::trunc);
  if (!out) throw IoError("cannot open " + manifest.string() + " for writing");
  out << "# subject_id\tpath\tlabel\tgroup\n";
  for (const auto& e : entries) {
    out << e.subject_id << '\t' << e.path.generic_string() << '\t' << e.label << '\t' << e.group << '\n';
  }
  if (!out) throw IoError("write failed for " + manifest.string());
}

std::vector<Volume> load_dataset(const std::filesystem::path& manifest) {
  const auto entries = read_manifest(manifest);
  if (entries.empty()) throw DataError(manifest.string() + ": manifest lists no subjects");
  const auto base = manifest.parent_path();
  std::vector<Volume> out;
  out.reserve(entries.size());
  for (const auto& e : entries) {
    const auto path = e.path.is_absolute() ? e.path : base / e.path;
    Volume v = load_volume(path);
    if (v.label != e.label) {
      throw DataError(manifest.string() + ": subject '" + e.subject_id + "' is labelled " + std::to_string(e.label) +
                      " but " + path.string() + " stores label " + std::to_string(v.label));
    }
    v.subject_id = e.subject_id;
    v.group = e.group;
    out.push_back(std::move(v));
  }
  return out;
}

Volume center_crop(const Volume& vol, const std::array<std::size_t, 3>& dims) {
  const auto in = vol.dims();
  std::array<std::size_t, 3> out{}, off{};
  bool same = true;
  for (std::size_t i = 0; i < 3; ++i) {
    out[i] = dims[i] == 0 ? in[i] : dims[i];
    if (out[i] > in[i]) {
      throw DataError("center_crop: subject '" + vol.subject_id + "' axis " + std::to_string(i) + " has extent " +
                      std::to_string(in[i]) + ", smaller than the crop " + std::to_string(out[i]));
    }
    off[i] = (in[i] - out[i]) / 2;
    same = same && out[i] == in[i];
  }
  if (same) return vol;
  std::vector<double> v(out[0] * out[1] * out[2]);
  auto src = vol.voxels.data();
  for (std::size_t d = 0; d < out[0]; ++d) {
    for (std::size_t h = 0; h < out[1]; ++h) {
      const std::size_t s = ((d + off[0]) * in[1] + (h + off[1])) * in[2] + off[2];
      std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(s), out[2], v.begin() + static_cast<std::ptrdiff_t>((d * out[1] + h) * out[2]));
    }
  }
  Volume r = vol;
  r.voxels = Tensor(Shape{1, out[0], out[1], out[2]}, std::move(v));
  return r;
}

}  // namespace mpk::data
