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

#ifndef LGM_OPTIMIZER_HPP_
#define LGM_OPTIMIZER_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "lgm/param_set.hpp"

namespace lgm {

enum class OptimizerKind { kSgd, kAdam };

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "sgd") return OptimizerKind::kSgd;
  if (s == "adam") return OptimizerKind::kAdam;
  throw ConfigError("unknown optimizer '" + s + "' (expected sgd|adam)");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double momentum = 0.9;    // sgd
  double beta1 = 0.9;       // adam
  double beta2 = 0.999;     // adam
  double epsilon = 1e-8;    // adam
};

// Per-parameter auxiliary buffers plus the step counter. Buffers are lazily
// shaped against the parameter set on the first step.
class OptimizerState {
 public:
  explicit OptimizerState(OptimizerConfig config) : config_(config) {}

  const OptimizerConfig& config() const { return config_; }
  std::uint64_t step_count() const { return step_count_; }

  // For learning-rate schedules; moment buffers are kept.
  void set_learning_rate(double lr) {
    check_config(lr > 0.0, "optimizer: learning rate must be > 0");
    config_.learning_rate = lr;
  }

  // One update over every parameter. Gradients must be populated and finite.
  void step(ParamSet& params) {
    if (buffers_.empty()) init_buffers(params);
    check_config(buffers_.size() == params.size() * buffers_per_param(),
                 "optimizer: parameter set changed size");
    ++step_count_;
    switch (config_.kind) {
      case OptimizerKind::kSgd:
        step_sgd(params);
        break;
      case OptimizerKind::kAdam:
        step_adam(params);
        break;
    }
  }

 private:
  std::size_t buffers_per_param() const {
    return config_.kind == OptimizerKind::kAdam ? 2 : 1;
  }

  void init_buffers(const ParamSet& params) {
    for (const auto& e : params.entries()) {
      buffers_.emplace_back(e.value.shape());
      if (config_.kind == OptimizerKind::kAdam)
        buffers_.emplace_back(e.value.shape());
    }
  }

  void step_sgd(ParamSet& params) {
    const double lr = config_.learning_rate, mu = config_.momentum;
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& e = params.entries()[p];
      Tensor& vel = buffers_[p];
      for (std::size_t i = 0; i < e.value.numel(); ++i) {
        const double g = e.grad[i];
        check_numeric(std::isfinite(g), "non-finite gradient for " + e.name);
        vel[i] = mu * vel[i] + g;
        e.value[i] -= lr * vel[i];
      }
      ensure_finite(e.value, "sgd update");
    }
  }

  void step_adam(ParamSet& params) {
    const double lr = config_.learning_rate;
    const double b1 = config_.beta1, b2 = config_.beta2, eps = config_.epsilon;
    const double t = static_cast<double>(step_count_);
    const double bc1 = 1.0 - std::pow(b1, t);
    const double bc2 = 1.0 - std::pow(b2, t);
    for (std::size_t p = 0; p < params.size(); ++p) {
      auto& e = params.entries()[p];
      Tensor& m = buffers_[2 * p];
      Tensor& v = buffers_[2 * p + 1];
      for (std::size_t i = 0; i < e.value.numel(); ++i) {
        const double g = e.grad[i];
        check_numeric(std::isfinite(g), "non-finite gradient for " + e.name);
        m[i] = b1 * m[i] + (1.0 - b1) * g;
        v[i] = b2 * v[i] + (1.0 - b2) * g * g;
        const double m_hat = m[i] / bc1;
        const double v_hat = v[i] / bc2;
        e.value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
      }
      ensure_finite(e.value, "adam update");
    }
  }

  OptimizerConfig config_;
  std::vector<Tensor> buffers_;
  std::uint64_t step_count_ = 0;
};

}  // namespace lgm

#endif  // LGM_OPTIMIZER_HPP_
