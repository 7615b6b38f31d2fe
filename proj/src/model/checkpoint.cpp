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

#include "model/checkpoint.hpp"

#include <algorithm>
#include <fstream>

#include "core/error.hpp"
#include "data/binary_io.hpp"

namespace mpk::model {

namespace {

constexpr char kMagic[4] = {'M', 'P', 'K', 'C'};
constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxName = 4096;

}  // namespace

void save_tensors(const std::filesystem::path& path, const NamedTensors& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(kMagic, 4);
  io::write_u32(out, kCheckpointVersion);
  io::write_u32(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& [name, t] : tensors) {
    io::write_u32(out, static_cast<std::uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    io::write_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) io::write_u32(out, static_cast<std::uint32_t>(d));
    io::write_f64s(out, t.data());
  }
  if (!out) throw IoError("write failed for " + path.string());
}

NamedTensors load_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[4] = {};
  in.read(magic, 4);
  if (in.gcount() != 4 || !std::equal(magic, magic + 4, kMagic)) {
    throw FormatError(path.string() + ": bad checkpoint magic '" + io::printable(magic, 4) + "', expected 'MPKC'");
  }
  const auto version = io::read_u32(in, path);
  if (version != kCheckpointVersion) {
    throw FormatError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = io::read_u32(in, path);
  NamedTensors out;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = io::read_u32(in, path);
    if (name_len == 0 || name_len > kMaxName) throw FormatError(path.string() + ": implausible tensor name length");
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (in.gcount() != static_cast<std::streamsize>(name_len)) throw TruncatedError(path.string() + ": truncated name");
    const auto rank = io::read_u32(in, path);
    if (rank > kMaxRank) throw FormatError(path.string() + ": tensor '" + name + "' has rank " + std::to_string(rank));
    Shape shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      d = io::read_u32(in, path);
      if (d == 0) throw FormatError(path.string() + ": tensor '" + name + "' has a zero dimension");
      if (numel > (std::size_t{1} << 40) / d) throw OverflowError(path.string() + ": tensor '" + name + "' is too large");
      numel *= d;
    }
    std::vector<double> values(numel);
    io::read_f64s(in, values, path);
    out.emplace_back(std::move(name), Tensor(std::move(shape), std::move(values)));
  }
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params) {
  save_tensors(path, params.named_parameters());
}

void assign_parameters(ModelParams& target, const NamedTensors& source) {
  auto expected = target.named_parameters();
  for (std::size_t i = 0; i < expected.size(); ++i) {
    auto& [name, t] = expected[i];
    if (i >= source.size()) throw FormatError("checkpoint is missing tensor '" + name + "'");
    const auto& [src_name, src] = source[i];
    if (src_name != name) {
      throw FormatError("checkpoint tensor " + std::to_string(i) + " is '" + src_name + "', expected '" + name + "'");
    }
    if (src.shape() != t.shape()) {
      throw FormatError("checkpoint tensor '" + name + "' has shape " + shape_str(src.shape()) + ", expected " +
                        shape_str(t.shape()));
    }
    auto dst = t.mutable_data();
    std::copy(src.data().begin(), src.data().end(), dst.begin());
  }
  if (source.size() > expected.size()) {
    throw FormatError("checkpoint has unexpected extra tensor '" + source[expected.size()].first + "'");
  }
}

ModelParams load_checkpoint(const std::filesystem::path& path, const ModelConfig& config) {
  ModelParams params = model_init(config, 0);
  try {
    assign_parameters(params, load_tensors(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  return params;
}

}  // namespace mpk::model
