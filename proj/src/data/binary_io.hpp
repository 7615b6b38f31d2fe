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

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <istream>
#include <ostream>
#include <span>
#include <string>

#include "core/error.hpp"

// Little-endian primitives shared by the volume and checkpoint formats.
namespace mpk::io {

static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");

inline void write_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

inline void write_f64s(std::ostream& out, std::span<const double> v) {
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

inline std::uint32_t read_u32(std::istream& in, const std::filesystem::path& path) {
  std::uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  if (in.gcount() != 4) throw TruncatedError(path.string() + ": unexpected end of file");
  return v;
}

inline void read_f64s(std::istream& in, std::span<double> v, const std::filesystem::path& path) {
  const auto bytes = static_cast<std::streamsize>(v.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(v.data()), bytes);
  if (in.gcount() != bytes) {
    throw TruncatedError(path.string() + ": payload holds " + std::to_string(in.gcount() / 8) + " values, expected " +
                         std::to_string(v.size()));
  }
}

inline std::string printable(const char* bytes, std::size_t n) {
  std::string s;
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<unsigned char>(bytes[i]);
    if (c >= 0x20 && c < 0x7f) {
      s += static_cast<char>(c);
    } else {
      static const char* hex = "0123456789abcdef";
      s += "\\x";
      s += hex[c >> 4];
      s += hex[c & 15];
    }
  }
  return s;
}

}  // namespace mpk::io
