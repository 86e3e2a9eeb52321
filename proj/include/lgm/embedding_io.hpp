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

#ifndef LGM_EMBEDDING_IO_HPP_
#define LGM_EMBEDDING_IO_HPP_

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "lgm/feature_io.hpp"
#include "lgm/tensor.hpp"

namespace lgm {

// Text embedding file: one record per line, `id<TAB>d0 d1 ... dD-1`.
// Values are written with 17 significant digits so a round-trip reproduces
// the double exactly.
inline void write_embeddings_text(
    const std::string& path,
    const std::vector<std::pair<std::string, Tensor>>& embeddings) {
  std::ofstream os(path, std::ios::trunc);
  check_data(os.good(), "embeddings: cannot open '" + path + "' for writing");
  char buf[64];
  for (const auto& [id, e] : embeddings) {
    os << id << '\t';
    for (std::size_t i = 0; i < e.numel(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", e[i]);
      os << buf << (i + 1 < e.numel() ? " " : "");
    }
    os << '\n';
  }
  check_data(os.good(), "embeddings: short write to '" + path + "'");
}

inline std::map<std::string, Tensor> read_embeddings_text(
    const std::string& path) {
  std::ifstream is(path);
  check_data(is.good(), "embeddings: cannot open '" + path + "'");
  std::map<std::string, Tensor> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    check_data(tab != std::string::npos,
               "embeddings: missing tab on line " + std::to_string(line_no) +
                   " of '" + path + "'");
    const std::string id = line.substr(0, tab);
    std::istringstream vs(line.substr(tab + 1));
    std::vector<double> values;
    double v;
    while (vs >> v) values.push_back(v);
    check_data(!values.empty(), "embeddings: empty record on line " +
                                    std::to_string(line_no));
    check_data(out.find(id) == out.end(),
               "embeddings: duplicate id '" + id + "'");
    out.emplace(id, Tensor({values.size()}, std::move(values)));
  }
  return out;
}

// Binary variant: one feature-container file per embedding (frames = 1)
// under a directory. Note the container holds float32, so this variant
// quantizes.
inline void write_embeddings_binary(
    const std::string& dir,
    const std::vector<std::pair<std::string, Tensor>>& embeddings) {
  std::filesystem::create_directories(dir);
  for (const auto& [id, e] : embeddings) {
    Tensor row({1, e.numel()}, std::vector<double>(e.values()));
    write_feature_file((std::filesystem::path(dir) / (id + ".lgmf")).string(),
                       row);
  }
}

inline std::map<std::string, Tensor> read_embeddings_binary(
    const std::string& dir) {
  std::map<std::string, Tensor> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".lgmf") continue;
    Tensor row = read_feature_file(entry.path().string());
    check_data(row.extent(0) == 1, "embeddings: expected single-row container");
    out.emplace(entry.path().stem().string(),
                Tensor({row.extent(1)}, std::vector<double>(row.values())));
  }
  check_data(!out.empty(), "embeddings: no .lgmf files under '" + dir + "'");
  return out;
}

}  // namespace lgm

#endif  // LGM_EMBEDDING_IO_HPP_
