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

#ifndef LGM_GM_LOSS_HPP_
#define LGM_GM_LOSS_HPP_

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "lgm/rng.hpp"
#include "lgm/tensor.hpp"

namespace lgm {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

// Gaussian mixture over the embedding space: one diagonal-covariance
// component per class. Covariances are stored as log-variances so positivity
// holds by construction; priors are fixed uniform (no update rule exists for
// them) which turns the posterior into a distance-based softmax.
struct GMParams {
  Tensor means;          // (K, D)
  Tensor log_variances;  // (K, D)
  Tensor priors;         // (K)

  std::size_t num_classes() const { return means.extent(0); }
  std::size_t dim() const { return means.extent(1); }

  static GMParams create(std::size_t num_classes, std::size_t dim) {
    check_config(num_classes >= 1 && dim >= 1, "gm: K and D must be >= 1");
    GMParams gm;
    gm.means = Tensor({num_classes, dim});
    gm.log_variances = Tensor({num_classes, dim});
    gm.priors = Tensor::full({num_classes}, 1.0 / static_cast<double>(num_classes));
    return gm;
  }

  // Means start at zero with a small seeded jitter, variances at one.
  static GMParams create_seeded(std::size_t num_classes, std::size_t dim,
                                Rng& rng, double jitter = 1e-2) {
    GMParams gm = create(num_classes, dim);
    for (std::size_t i = 0; i < gm.means.numel(); ++i)
      gm.means[i] = rng.normal(0.0, jitter);
    return gm;
  }

  void validate() const {
    check_config(means.rank() == 2 && log_variances.same_shape(means),
                 "gm: means/log_variances must both be (K,D)");
    check_config(priors.numel() == num_classes(), "gm: priors extent mismatch");
    double sum = 0.0;
    for (std::size_t k = 0; k < priors.numel(); ++k) {
      check_config(priors[k] >= 0.0, "gm: negative prior");
      sum += priors[k];
    }
    check_config(std::abs(sum - 1.0) <= 1e-12, "gm: priors must sum to 1");
  }
};

struct LossConfig {
  double alpha = 0.0;            // margin coefficient, m = alpha * d_true
  double lambda = 0.1;           // likelihood regularization weight
  double variance_floor = 1e-6;  // lower bound on exp(log_variance)
  bool log_domain_stabilizer = true;  // max-subtraction in logsumexp

  void validate() const {
    check_config(alpha >= 0.0, "loss: alpha must be >= 0");
    check_config(lambda >= 0.0, "loss: lambda must be >= 0");
    check_config(variance_floor > 0.0, "loss: variance floor must be > 0");
  }
};

// A labeled minibatch of embeddings.
struct Batch {
  Tensor embeddings;             // (N, D)
  std::vector<std::size_t> labels;  // N entries in [0, K)

  std::size_t size() const { return embeddings.extent(0); }
  std::size_t dim() const { return embeddings.extent(1); }

  void validate(std::size_t num_classes) const {
    check_config(embeddings.rank() == 2 && size() >= 1, "batch: N >= 1 required");
    check_config(labels.size() == size(), "batch: label count mismatch");
    for (std::size_t z : labels)
      check_config(z < num_classes, "batch: label out of range");
  }
};

namespace detail {

inline double floored_variance(double log_var, double floor) {
  return std::max(std::exp(log_var), floor);
}

// logsumexp with max subtraction; the direct ratio of exponentials overflows
// once distances grow past ~700.
inline double log_sum_exp(const std::vector<double>& v, bool stabilize) {
  if (!stabilize) {
    double s = 0.0;
    for (double x : v) s += std::exp(x);
    return std::log(s);
  }
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace detail

// Squared Mahalanobis distance with the factor 1/2:
//   d_k(x) = (x - mu_k)^T Sigma_k^{-1} (x - mu_k) / 2
inline double mahalanobis_sq(const double* x, std::size_t k, const GMParams& gm,
                             double variance_floor) {
  const std::size_t d = gm.dim();
  const double* mu = gm.means.data() + k * d;
  const double* lv = gm.log_variances.data() + k * d;
  double acc = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    const double diff = x[i] - mu[i];
    acc += diff * diff / detail::floored_variance(lv[i], variance_floor);
  }
  return 0.5 * acc;
}

inline double mahalanobis_sq(const Tensor& x, std::size_t k, const GMParams& gm,
                             double variance_floor = 1e-6) {
  check_config(x.numel() == gm.dim(), "mahalanobis: dimension mismatch");
  check_config(k < gm.num_classes(), "mahalanobis: class index out of range");
  return mahalanobis_sq(x.data(), k, gm, variance_floor);
}

// log N(x; mu_k, Sigma_k) = -(D/2) log(2 pi) - (1/2) log|Sigma_k| - d_k
inline double gaussian_log_density(const Tensor& x, std::size_t k,
                                   const GMParams& gm,
                                   double variance_floor = 1e-6) {
  check_config(x.numel() == gm.dim(), "log_density: dimension mismatch");
  check_config(k < gm.num_classes(), "log_density: class index out of range");
  const std::size_t d = gm.dim();
  const double* lv = gm.log_variances.data() + k * d;
  double log_det = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    log_det += std::log(detail::floored_variance(lv[i], variance_floor));
  return -0.5 * static_cast<double>(d) * kLog2Pi - 0.5 * log_det -
         mahalanobis_sq(x.data(), k, gm, variance_floor);
}

// Posterior over classes, computed in the log domain.
inline Tensor posterior(const Tensor& x, const GMParams& gm,
                        const LossConfig& cfg = LossConfig{}) {
  const std::size_t num_classes = gm.num_classes();
  std::vector<double> logits(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k)
    logits[k] = std::log(gm.priors[k]) +
                gaussian_log_density(x, k, gm, cfg.variance_floor);
  const double lse = detail::log_sum_exp(logits, cfg.log_domain_stabilizer);
  Tensor out({num_classes});
  for (std::size_t k = 0; k < num_classes; ++k)
    out[k] = std::exp(logits[k] - lse);
  ensure_finite(out, "posterior");
  return out;
}

namespace detail {

// Per-sample margin-modified logits:
//   t_k = log p(k) - (1/2) log|Sigma_k| - d_k - 1(k == z) * m,  m = alpha * d_z
// The margin enters the true-class term in both numerator and denominator,
// which is exactly the indicator form of the margin loss.
struct SampleLogits {
  std::vector<double> t;       // K logits
  std::vector<double> dist;    // K squared Mahalanobis distances
  double margin = 0.0;
};

inline SampleLogits margin_logits(const double* x, std::size_t z,
                                  const GMParams& gm, const LossConfig& cfg) {
  const std::size_t num_classes = gm.num_classes();
  const std::size_t d = gm.dim();
  SampleLogits s;
  s.t.resize(num_classes);
  s.dist.resize(num_classes);
  for (std::size_t k = 0; k < num_classes; ++k) {
    const double* lv = gm.log_variances.data() + k * d;
    double log_det = 0.0;
    for (std::size_t i = 0; i < d; ++i)
      log_det += std::log(floored_variance(lv[i], cfg.variance_floor));
    s.dist[k] = mahalanobis_sq(x, k, gm, cfg.variance_floor);
    s.t[k] = std::log(gm.priors[k]) - 0.5 * log_det - s.dist[k];
  }
  s.margin = cfg.alpha * s.dist[z];
  s.t[z] -= s.margin;
  return s;
}

}  // namespace detail

// Mean over the batch of -log of the margin-modified posterior of the true
// class. With alpha = 0 this reduces exactly to the plain cross-entropy
// under the mixture posterior (same code path, margin identically zero).
inline double classification_loss(const Batch& batch, const GMParams& gm,
                                  const LossConfig& cfg) {
  gm.validate();
  cfg.validate();
  batch.validate(gm.num_classes());
  check_config(batch.dim() == gm.dim(), "loss: batch/gm dimension mismatch");

  const std::size_t n = batch.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double* x = batch.embeddings.data() + i * batch.dim();
    const auto s = detail::margin_logits(x, batch.labels[i], gm, cfg);
    const double lse = detail::log_sum_exp(s.t, cfg.log_domain_stabilizer);
    total += lse - s.t[batch.labels[i]];
  }
  const double loss = total / static_cast<double>(n);
  ensure_finite(loss, "classification_loss");
  return loss;
}

// Mean over the batch of -log N(x_i; mu_{z_i}, Sigma_{z_i}). The mean (not
// the raw sum) keeps lambda meaningful across batch sizes.
inline double likelihood_regularization(const Batch& batch, const GMParams& gm,
                                        double variance_floor = 1e-6) {
  gm.validate();
  batch.validate(gm.num_classes());
  check_config(batch.dim() == gm.dim(), "loss: batch/gm dimension mismatch");
  const std::size_t n = batch.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    Tensor x({batch.dim()},
             std::vector<double>(batch.embeddings.data() + i * batch.dim(),
                                 batch.embeddings.data() + (i + 1) * batch.dim()));
    total -= gaussian_log_density(x, batch.labels[i], gm, variance_floor);
  }
  const double loss = total / static_cast<double>(n);
  ensure_finite(loss, "likelihood_regularization");
  return loss;
}

struct LossValue {
  double total = 0.0;
  double cls = 0.0;
  double lkd = 0.0;
};

inline LossValue lgm_loss(const Batch& batch, const GMParams& gm,
                          const LossConfig& cfg) {
  LossValue v;
  v.cls = classification_loss(batch, gm, cfg);
  v.lkd = likelihood_regularization(batch, gm, cfg.variance_floor);
  v.total = v.cls + cfg.lambda * v.lkd;
  return v;
}

// Gradients of the total loss w.r.t. embeddings, means and log-variances.
//
// With q = softmax(t), g_k = q_k - 1(k == z) and
// w_k = g_k + 1(k == z) * alpha * g_z (the extra term carries the adaptive
// margin m = alpha * d_z through the true-class logit):
//   dL_cls/d d_k   = -w_k
//   dL_cls/d x     = -sum_k w_k (x - mu_k) / sigma2_k
//   dL_cls/d mu_k  =  w_k (x - mu_k) / sigma2_k
//   dL_cls/d lv_kj = -g_k / 2 + w_k (x_j - mu_kj)^2 / (2 sigma2_kj)
// The regularizer adds its own (x - mu_z) / sigma2_z terms on the true class.
// Entries whose variance sits on the floor receive zero covariance gradient
// (the floor is a constant there).
struct LossGradients {
  Tensor d_embeddings;     // (N, D)
  Tensor d_means;          // (K, D)
  Tensor d_log_variances;  // (K, D)
};

inline LossGradients lgm_loss_backward(const Batch& batch, const GMParams& gm,
                                       const LossConfig& cfg,
                                       LossValue* value_out = nullptr) {
  gm.validate();
  cfg.validate();
  batch.validate(gm.num_classes());
  check_config(batch.dim() == gm.dim(), "loss: batch/gm dimension mismatch");

  const std::size_t n = batch.size();
  const std::size_t num_classes = gm.num_classes();
  const std::size_t d = gm.dim();
  const double inv_n = 1.0 / static_cast<double>(n);

  LossGradients grads;
  grads.d_embeddings = Tensor(batch.embeddings.shape());
  grads.d_means = Tensor(gm.means.shape());
  grads.d_log_variances = Tensor(gm.log_variances.shape());

  double cls_total = 0.0, lkd_total = 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const double* x = batch.embeddings.data() + i * d;
    const std::size_t z = batch.labels[i];
    const auto s = detail::margin_logits(x, z, gm, cfg);
    const double lse = detail::log_sum_exp(s.t, cfg.log_domain_stabilizer);
    cls_total += lse - s.t[z];

    std::vector<double> q(num_classes);
    for (std::size_t k = 0; k < num_classes; ++k)
      q[k] = std::exp(s.t[k] - lse);

    double* dx = grads.d_embeddings.data() + i * d;
    const double g_z = q[z] - 1.0;

    for (std::size_t k = 0; k < num_classes; ++k) {
      const double g_k = q[k] - (k == z ? 1.0 : 0.0);
      const double w_k = g_k + (k == z ? cfg.alpha * g_z : 0.0);
      const double* mu = gm.means.data() + k * d;
      const double* lv = gm.log_variances.data() + k * d;
      double* dmu = grads.d_means.data() + k * d;
      double* dlv = grads.d_log_variances.data() + k * d;

      for (std::size_t j = 0; j < d; ++j) {
        const double var = detail::floored_variance(lv[j], cfg.variance_floor);
        const bool on_floor = std::exp(lv[j]) < cfg.variance_floor;
        const double diff = x[j] - mu[j];
        const double u = diff / var;

        dx[j] += inv_n * (-w_k * u);
        dmu[j] += inv_n * (w_k * u);
        if (!on_floor)
          dlv[j] += inv_n * (-0.5 * g_k + 0.5 * w_k * diff * u);
      }
    }

    // Likelihood regularization on the true class.
    {
      const double* mu = gm.means.data() + z * d;
      const double* lv = gm.log_variances.data() + z * d;
      double* dmu = grads.d_means.data() + z * d;
      double* dlv = grads.d_log_variances.data() + z * d;
      double sample_lkd = 0.5 * static_cast<double>(d) * kLog2Pi;
      for (std::size_t j = 0; j < d; ++j) {
        const double var = detail::floored_variance(lv[j], cfg.variance_floor);
        const bool on_floor = std::exp(lv[j]) < cfg.variance_floor;
        const double diff = x[j] - mu[j];
        const double u = diff / var;
        sample_lkd += 0.5 * std::log(var) + 0.5 * diff * u;

        dx[j] += cfg.lambda * inv_n * u;
        dmu[j] -= cfg.lambda * inv_n * u;
        if (!on_floor)
          dlv[j] += cfg.lambda * inv_n * 0.5 * (1.0 - diff * u);
      }
      lkd_total += sample_lkd;
    }
  }

  if (value_out) {
    value_out->cls = cls_total * inv_n;
    value_out->lkd = lkd_total * inv_n;
    value_out->total = value_out->cls + cfg.lambda * value_out->lkd;
    ensure_finite(value_out->total, "lgm_loss");
  }
  ensure_finite(grads.d_embeddings, "lgm gradient (embeddings)");
  ensure_finite(grads.d_means, "lgm gradient (means)");
  ensure_finite(grads.d_log_variances, "lgm gradient (log-variances)");
  return grads;
}

// True iff x is closer (in squared Mahalanobis distance) to class z than to
// every other class by more than m: d_k - d_z > m for all k != z.
inline bool margin_classification_check(const Tensor& x, std::size_t z,
                                        const GMParams& gm, double margin,
                                        double variance_floor = 1e-6) {
  check_config(margin >= 0.0, "margin check: m must be >= 0");
  check_config(z < gm.num_classes(), "margin check: class out of range");
  const double d_z = mahalanobis_sq(x, z, gm, variance_floor);
  for (std::size_t k = 0; k < gm.num_classes(); ++k) {
    if (k == z) continue;
    const double d_k = mahalanobis_sq(x, k, gm, variance_floor);
    if (!(d_k - d_z > margin)) return false;
  }
  return true;
}

}  // namespace lgm

#endif  // LGM_GM_LOSS_HPP_
