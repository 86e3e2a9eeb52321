// Copyright (c) 2026 lgm-sv authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LGM_FEATURE_IO_HPP_
#define LGM_FEATURE_IO_HPP_

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "lgm/tensor.hpp"

namespace lgm {

// Binary feature container, little-endian:
//   magic 'LGMF' | version u32 = 1 | frames u32 | feat_dim u32 |
//   frames * feat_dim float32, row-major.
// The container replaces an audio front-end: the artifact ingests
// precomputed feature matrices and never touches raw audio.

constexpr char kFeatureMagic[4] = {'L', 'G', 'M', 'F'};
constexpr std::uint32_t kFeatureVersion = 1;
// Caps frames * feat_dim; headers past this are treated as corrupt.
constexpr std::uint64_t kMaxFeatureElements = 1ull << 31;

namespace io_detail {

inline void write_u32(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline bool read_u32(std::istream& is, std::uint32_t* v) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4)) return false;
  *v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
       (static_cast<std::uint32_t>(b[2]) << 16) |
       (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

inline void write_f32(std::ostream& os, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  write_u32(os, bits);
}

inline bool read_f32(std::istream& is, float* f) {
  std::uint32_t bits;
  if (!read_u32(is, &bits)) return false;
  std::memcpy(f, &bits, 4);
  return true;
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
  write_u32(os, static_cast<std::uint32_t>(v & 0xffffffffu));
  write_u32(os, static_cast<std::uint32_t>(v >> 32));
}

inline bool read_u64(std::istream& is, std::uint64_t* v) {
  std::uint32_t lo, hi;
  if (!read_u32(is, &lo) || !read_u32(is, &hi)) return false;
  *v = static_cast<std::uint64_t>(hi) << 32 | lo;
  return true;
}

inline void write_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  write_u64(os, bits);
}

inline bool read_f64(std::istream& is, double* d) {
  std::uint64_t bits;
  if (!read_u64(is, &bits)) return false;
  std::memcpy(d, &bits, 8);
  return true;
}

}  // namespace io_detail

// Writes a (frames, feat_dim) matrix; values are quantized to float32.
inline void write_feature_file(const std::string& path, const Tensor& features) {
  check_data(features.rank() == 2, "feature write: matrix required");
  check_data(features.extent(0) >= 1, "feature write: zero-frame file rejected");
  check_data(features.extent(1) >= 1, "feature write: zero feature dim");
  check_data(static_cast<std::uint64_t>(features.numel()) <= kMaxFeatureElements,
             "feature write: dimension overflow");
  ensure_finite(features, "feature payload");

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  check_data(os.good(), "feature write: cannot open '" + path + "'");
  os.write(kFeatureMagic, 4);
  io_detail::write_u32(os, kFeatureVersion);
  io_detail::write_u32(os, static_cast<std::uint32_t>(features.extent(0)));
  io_detail::write_u32(os, static_cast<std::uint32_t>(features.extent(1)));
  for (std::size_t i = 0; i < features.numel(); ++i)
    io_detail::write_f32(os, static_cast<float>(features[i]));
  check_data(os.good(), "feature write: short write to '" + path + "'");
}

inline Tensor read_feature_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check_data(is.good(), "feature read: cannot open '" + path + "'");

  char magic[4];
  check_data(static_cast<bool>(is.read(magic, 4)) &&
                 std::memcmp(magic, kFeatureMagic, 4) == 0,
             "feature read: bad magic in '" + path + "'");
  std::uint32_t version = 0, frames = 0, dim = 0;
  check_data(io_detail::read_u32(is, &version) && version == kFeatureVersion,
             "feature read: unsupported version in '" + path + "'");
  check_data(io_detail::read_u32(is, &frames) && io_detail::read_u32(is, &dim),
             "feature read: truncated header in '" + path + "'");
  check_data(frames >= 1 && dim >= 1, "feature read: zero dimension in '" + path + "'");
  check_data(static_cast<std::uint64_t>(frames) * dim <= kMaxFeatureElements,
             "feature read: dimension overflow in '" + path + "'");

  Tensor t({frames, dim});
  for (std::size_t i = 0; i < t.numel(); ++i) {
    float f;
    check_data(io_detail::read_f32(is, &f),
               "feature read: truncated payload in '" + path + "'");
    t[i] = static_cast<double>(f);
  }
  // Anything after the payload means the header lied about the size.
  is.peek();
  check_data(is.eof(), "feature read: trailing bytes in '" + path + "'");
  ensure_finite(t, "feature payload");
  return t;
}

}  // namespace lgm

#endif  // LGM_FEATURE_IO_HPP_
