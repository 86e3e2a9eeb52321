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

#ifndef LGM_PARAM_SET_HPP_
#define LGM_PARAM_SET_HPP_

#include <string>
#include <unordered_map>
#include <vector>

#include "lgm/tensor.hpp"

namespace lgm {

// Named (value, gradient) pairs. Iteration follows insertion order so that
// optimizer sweeps and serialization are deterministic.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Tensor value;
    Tensor grad;
  };

  Tensor& add(const std::string& name, Tensor value) {
    check_config(index_.find(name) == index_.end(),
                 "param set: duplicate name '" + name + "'");
    index_[name] = entries_.size();
    Entry e;
    e.name = name;
    e.grad = Tensor(value.shape());
    e.value = std::move(value);
    entries_.push_back(std::move(e));
    return entries_.back().value;
  }

  bool has(const std::string& name) const {
    return index_.find(name) != index_.end();
  }

  Tensor& value(const std::string& name) { return entry(name).value; }
  const Tensor& value(const std::string& name) const { return entry(name).value; }
  Tensor& grad(const std::string& name) { return entry(name).grad; }
  const Tensor& grad(const std::string& name) const { return entry(name).grad; }

  Entry& entry(const std::string& name) {
    auto it = index_.find(name);
    check_config(it != index_.end(), "param set: unknown name '" + name + "'");
    return entries_[it->second];
  }
  const Entry& entry(const std::string& name) const {
    auto it = index_.find(name);
    check_config(it != index_.end(), "param set: unknown name '" + name + "'");
    return entries_[it->second];
  }

  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

  void zero_grad() {
    for (Entry& e : entries_) e.grad.fill(0.0);
  }

  // Accumulates another set's gradients; used to merge per-thread partials
  // in a fixed order.
  void accumulate_grads(const ParamSet& other) {
    check_config(other.size() == size(), "param set: accumulate size mismatch");
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      Tensor& g = entries_[i].grad;
      const Tensor& o = other.entries_[i].grad;
      check_config(g.same_shape(o), "param set: accumulate shape mismatch");
      for (std::size_t j = 0; j < g.numel(); ++j) g[j] += o[j];
    }
  }

  std::size_t total_scalars() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.value.numel();
    return n;
  }

 private:
  std::vector<Entry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

}  // namespace lgm

#endif  // LGM_PARAM_SET_HPP_
