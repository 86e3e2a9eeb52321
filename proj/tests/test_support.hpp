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
//
// Reference oracles for the test suites. Everything here recomputes results
// along an independent route (direct arithmetic, exhaustive sweeps, brute
// force) and must stay decoupled from the library implementation paths it
// certifies.

#ifndef LGM_TESTS_TEST_SUPPORT_HPP_
#define LGM_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include "lgm/evaluation.hpp"
#include "lgm/gm_loss.hpp"
#include "lgm/rng.hpp"
#include "lgm/tensor.hpp"

namespace lgm_test {

// Direct product-form Gaussian density (no log domain).
inline double direct_density(const lgm::Tensor& x, std::size_t k,
                             const lgm::GMParams& gm, double floor = 1e-6) {
  double p = 1.0;
  const std::size_t d = gm.dim();
  for (std::size_t j = 0; j < d; ++j) {
    const double var = std::max(std::exp(gm.log_variances.at(k, j)), floor);
    const double diff = x[j] - gm.means.at(k, j);
    p *= std::exp(-diff * diff / (2.0 * var)) /
         std::sqrt(2.0 * 3.14159265358979323846 * var);
  }
  return p;
}

// Posterior by direct (non-log) evaluation of the mixture ratio.
inline std::vector<double> direct_posterior(const lgm::Tensor& x,
                                            const lgm::GMParams& gm,
                                            double floor = 1e-6) {
  const std::size_t num_classes = gm.num_classes();
  std::vector<double> numer(num_classes);
  double denom = 0.0;
  for (std::size_t k = 0; k < num_classes; ++k) {
    numer[k] = direct_density(x, k, gm, floor) * gm.priors[k];
    denom += numer[k];
  }
  for (double& v : numer) v /= denom;
  return numer;
}

// Plain mixture cross-entropy (margin-free form), computed with the same
// stabilized logsumexp recipe the implementation commits to. Used for the
// bit-for-bit alpha = 0 reduction check.
inline double plain_cross_entropy(const lgm::Batch& batch,
                                  const lgm::GMParams& gm,
                                  double floor = 1e-6) {
  const std::size_t n = batch.size(), num_classes = gm.num_classes(),
                    d = gm.dim();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> t(num_classes);
    for (std::size_t k = 0; k < num_classes; ++k) {
      double log_det = 0.0, dist = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double var = std::max(std::exp(gm.log_variances.at(k, j)), floor);
        const double diff = batch.embeddings.at(i, j) - gm.means.at(k, j);
        log_det += std::log(var);
        dist += diff * diff / var;
      }
      t[k] = std::log(gm.priors[k]) - 0.5 * log_det - 0.5 * dist;
    }
    const double m = *std::max_element(t.begin(), t.end());
    double s = 0.0;
    for (double v : t) s += std::exp(v - m);
    total += (m + std::log(s)) - t[batch.labels[i]];
  }
  return total / static_cast<double>(n);
}

// Exhaustive threshold-sweep EER oracle: recount FAR and FRR from scratch at
// every candidate threshold (each distinct score plus one above the top),
// and take the operating point minimizing max(FAR, FRR). Quadratic on
// purpose; no sorting tricks shared with the implementation.
struct SweepEer {
  double eer = 0.0;
  double threshold = 0.0;
};

inline SweepEer exhaustive_eer(const lgm::ScoreSet& scores) {
  std::vector<double> candidates;
  for (const auto& s : scores.items) candidates.push_back(s.score);
  const double top = *std::max_element(candidates.begin(), candidates.end());
  candidates.push_back(top + 1.0);

  SweepEer best;
  best.eer = 2.0;
  for (double t : candidates) {
    std::size_t fa = 0, nn = 0, fr = 0, nt = 0;
    for (const auto& s : scores.items) {
      if (s.trial.target) {
        ++nt;
        if (s.score < t) ++fr;
      } else {
        ++nn;
        if (s.score >= t) ++fa;
      }
    }
    const double far = static_cast<double>(fa) / static_cast<double>(nn);
    const double frr = static_cast<double>(fr) / static_cast<double>(nt);
    const double worst = std::max(far, frr);
    if (worst < best.eer) {
      best.eer = worst;
      best.threshold = t;
    }
  }
  return best;
}

// Exhaustive best-threshold accuracy.
inline double exhaustive_acc(const lgm::ScoreSet& scores) {
  std::vector<double> candidates;
  for (const auto& s : scores.items) candidates.push_back(s.score);
  const double top = *std::max_element(candidates.begin(), candidates.end());
  candidates.push_back(top + 1.0);

  double best = 0.0;
  for (double t : candidates) {
    std::size_t correct = 0;
    for (const auto& s : scores.items) {
      const bool accept = s.score >= t;
      if (accept == s.trial.target) ++correct;
    }
    best = std::max(best, static_cast<double>(correct) /
                              static_cast<double>(scores.items.size()));
  }
  return best;
}

// Spearman rank correlation with average ranks on ties.
inline std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

inline double spearman(const std::vector<double>& a,
                       const std::vector<double>& b) {
  const auto ra = average_ranks(a), rb = average_ranks(b);
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += ra[i];
    mb += rb[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cov += (ra[i] - ma) * (rb[i] - mb);
    va += (ra[i] - ma) * (ra[i] - ma);
    vb += (rb[i] - mb) * (rb[i] - mb);
  }
  return cov / std::sqrt(va * vb);
}

// Random loss configurations for gradient certification. Log-variances stay
// in [-1.5, 1.5] so nothing sits near the variance floor where the floored
// branch would zero the analytic derivative.
struct RandomCase {
  lgm::GMParams gm;
  lgm::Batch batch;
};

inline RandomCase random_case(lgm::Rng& rng, std::size_t num_classes,
                              std::size_t dim, std::size_t batch_size) {
  RandomCase c;
  c.gm = lgm::GMParams::create(num_classes, dim);
  for (std::size_t i = 0; i < c.gm.means.numel(); ++i)
    c.gm.means[i] = rng.normal(0.0, 1.5);
  for (std::size_t i = 0; i < c.gm.log_variances.numel(); ++i)
    c.gm.log_variances[i] = rng.uniform(-1.5, 1.5);
  c.batch.embeddings = lgm::Tensor({batch_size, dim});
  for (std::size_t i = 0; i < c.batch.embeddings.numel(); ++i)
    c.batch.embeddings[i] = rng.normal(0.0, 1.5);
  c.batch.labels.resize(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i)
    c.batch.labels[i] = rng.uniform_index(num_classes);
  return c;
}

}  // namespace lgm_test

#endif  // LGM_TESTS_TEST_SUPPORT_HPP_
