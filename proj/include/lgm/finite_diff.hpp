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

#ifndef LGM_FINITE_DIFF_HPP_
#define LGM_FINITE_DIFF_HPP_

#include <functional>
#include <string>
#include <vector>

#include "lgm/param_set.hpp"

namespace lgm {

// Central-difference gradient oracle: (f(p+eps) - f(p-eps)) / (2 eps) per
// scalar entry. Central differences with eps = 1e-5 balance truncation
// against round-off at 64-bit precision. This is the reference every
// analytic gradient in the repository is certified against; it must never
// call into the analytic backward paths.
class FiniteDiff {
 public:
  using ScalarFn = std::function<double(const ParamSet&)>;

  static constexpr double kDefaultEpsilon = 1e-5;

  // Returns a ParamSet whose grad fields hold the estimates; values are
  // copied from the input unchanged.
  static ParamSet gradient(const ScalarFn& f, const ParamSet& params,
                           double epsilon = kDefaultEpsilon) {
    ParamSet probe;
    for (const auto& e : params.entries()) probe.add(e.name, e.value);

    for (auto& e : probe.entries()) {
      for (std::size_t i = 0; i < e.value.numel(); ++i) {
        const double saved = e.value[i];
        e.value[i] = saved + epsilon;
        const double f_plus = f(probe);
        e.value[i] = saved - epsilon;
        const double f_minus = f(probe);
        e.value[i] = saved;
        check_numeric(std::isfinite(f_plus) && std::isfinite(f_minus),
                      "finite_diff: objective non-finite at probe of " + e.name);
        e.grad[i] = (f_plus - f_minus) / (2.0 * epsilon);
      }
    }
    return probe;
  }
};

// Normwise relative error between an analytic gradient and its
// finite-difference estimate; the floor keeps all-zero gradients (constant
// objectives) from dividing by zero.
inline double gradient_rel_error(const Tensor& analytic, const Tensor& fd) {
  check_config(analytic.same_shape(fd), "gradient_rel_error: shape mismatch");
  double diff2 = 0.0, a2 = 0.0, f2 = 0.0;
  for (std::size_t i = 0; i < analytic.numel(); ++i) {
    const double d = analytic[i] - fd[i];
    diff2 += d * d;
    a2 += analytic[i] * analytic[i];
    f2 += fd[i] * fd[i];
  }
  const double denom = std::max({std::sqrt(a2), std::sqrt(f2), 1e-10});
  return std::sqrt(diff2) / denom;
}

}  // namespace lgm

#endif  // LGM_FINITE_DIFF_HPP_
