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

#ifndef LGM_TRAINER_HPP_
#define LGM_TRAINER_HPP_

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lgm/corpus.hpp"
#include "lgm/encoder.hpp"
#include "lgm/feature_io.hpp"
#include "lgm/gm_loss.hpp"
#include "lgm/optimizer.hpp"
#include "lgm/triplet_loss.hpp"

namespace lgm {

enum class LossKind { kLgm, kTriplet };

inline LossKind loss_kind_from_string(const std::string& s) {
  if (s == "lgm") return LossKind::kLgm;
  if (s == "triplet") return LossKind::kTriplet;
  throw ConfigError("unknown loss '" + s + "' (expected lgm|triplet)");
}

inline const char* to_string(LossKind k) {
  return k == LossKind::kLgm ? "lgm" : "triplet";
}

struct TrainConfig {
  LossKind loss = LossKind::kLgm;
  double alpha = 1.0;
  double lambda = 0.1;
  double variance_floor = 1e-6;
  double triplet_margin = 0.2;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  OptimizerConfig optimizer;      // adam, lr 1e-3
  double lr_decay = 1.0;          // per-epoch multiplicative decay
  std::uint64_t seed = 7;
  std::size_t checkpoint_interval = 0;  // epochs between snapshots; 0 = none
  std::size_t chunk_frames = 100;       // training crop length
  std::size_t num_threads = 2;
  EncoderConfig encoder;

  void validate() const {
    check_config(epochs >= 1, "train: epochs must be >= 1");
    check_config(batch_size >= 1, "train: batch_size must be >= 1");
    check_config(alpha >= 0.0 && lambda >= 0.0, "train: alpha/lambda >= 0");
    check_config(lr_decay > 0.0, "train: lr_decay must be > 0");
    check_config(num_threads >= 1, "train: num_threads must be >= 1");
    encoder.validate();
  }
};

struct StepRecord {
  std::uint64_t step = 0;
  std::size_t epoch = 0;
  double total = 0.0;
  double cls = 0.0;
  double lkd = 0.0;
};

struct TrainReport {
  std::vector<StepRecord> steps;
  std::vector<double> epoch_accuracy;    // Eq.-4-argmax accuracy (lgm only)
  std::vector<double> epoch_mean_total;
  double wall_seconds = 0.0;
  std::string checkpoint_path;
};

struct TrainResult {
  ParamSet params;   // encoder weights (+ gm.means/gm.log_vars when lgm)
  GMParams gm;       // valid iff has_gm
  bool has_gm = false;
  TrainReport report;
};

// Posterior argmax over classes; ties break toward the smaller index.
inline std::size_t classify_train_sample(const Tensor& x, const GMParams& gm,
                                         double variance_floor = 1e-6) {
  std::size_t best = 0;
  double best_logit = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < gm.num_classes(); ++k) {
    const double logit =
        std::log(gm.priors[k]) + gaussian_log_density(x, k, gm, variance_floor);
    if (logit > best_logit) {
      best_logit = logit;
      best = k;
    }
  }
  return best;
}

// ---- checkpoint container ----
//
// magic 'LGMC' | version u32 = 1 | u64 manifest length | manifest text
// (key = value lines) | u32 blob count | blobs. Each blob: u32 name length,
// name, u32 rank, u32 extents, u64 element count, float64 payload (LE).

constexpr char kCheckpointMagic[4] = {'L', 'G', 'M', 'C'};
constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  std::map<std::string, std::string> manifest;
  ParamSet params;

  bool has_gm() const {
    auto it = manifest.find("has_gm");
    return it != manifest.end() && it->second == "1";
  }

  std::string get(const std::string& key) const {
    auto it = manifest.find(key);
    check_data(it != manifest.end(), "checkpoint: missing manifest key '" + key + "'");
    return it->second;
  }

  double get_real(const std::string& key) const { return std::stod(get(key)); }
  std::uint64_t get_uint(const std::string& key) const {
    return std::stoull(get(key));
  }

  EncoderConfig encoder_config() const {
    EncoderConfig e;
    e.input_feat_dim = get_uint("encoder.input_feat_dim");
    e.block_channels.clear();
    std::istringstream cs(get("encoder.block_channels"));
    std::string tok;
    while (std::getline(cs, tok, ','))
      e.block_channels.push_back(std::stoull(tok));
    e.blocks_per_stage = get_uint("encoder.blocks_per_stage");
    e.transition_filter_h = get_uint("encoder.transition_filter_h");
    e.transition_filter_w = get_uint("encoder.transition_filter_w");
    e.transition_stride_h = get_uint("encoder.transition_stride_h");
    e.transition_stride_w = get_uint("encoder.transition_stride_w");
    e.block_filter = get_uint("encoder.block_filter");
    e.embedding_dim = get_uint("encoder.embedding_dim");
    e.min_input_frames = get_uint("encoder.min_input_frames");
    e.normalize_embeddings = get("encoder.normalize_embeddings") == "1";
    return e;
  }

  GMParams gm() const {
    check_data(has_gm(), "checkpoint: no GM parameters (triplet model?)");
    GMParams g;
    g.means = params.value("gm.means");
    g.log_variances = params.value("gm.log_vars");
    g.priors = params.value("gm.priors");
    return g;
  }
};

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  check_data(os.good(), "checkpoint: cannot open '" + path + "' for writing");
  os.write(kCheckpointMagic, 4);
  io_detail::write_u32(os, kCheckpointVersion);

  std::ostringstream manifest;
  for (const auto& [k, v] : ckpt.manifest) manifest << k << " = " << v << '\n';
  const std::string m = manifest.str();
  io_detail::write_u64(os, m.size());
  os.write(m.data(), static_cast<std::streamsize>(m.size()));

  io_detail::write_u32(os, static_cast<std::uint32_t>(ckpt.params.size()));
  for (const auto& e : ckpt.params.entries()) {
    io_detail::write_u32(os, static_cast<std::uint32_t>(e.name.size()));
    os.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    io_detail::write_u32(os, static_cast<std::uint32_t>(e.value.rank()));
    for (std::size_t ext : e.value.shape())
      io_detail::write_u32(os, static_cast<std::uint32_t>(ext));
    io_detail::write_u64(os, e.value.numel());
    for (std::size_t i = 0; i < e.value.numel(); ++i)
      io_detail::write_f64(os, e.value[i]);
  }
  check_data(os.good(), "checkpoint: short write to '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  check_data(is.good(), "checkpoint: cannot open '" + path + "'");
  char magic[4];
  check_data(static_cast<bool>(is.read(magic, 4)) &&
                 std::memcmp(magic, kCheckpointMagic, 4) == 0,
             "checkpoint: bad magic in '" + path + "'");
  std::uint32_t version = 0;
  check_data(io_detail::read_u32(is, &version) && version == kCheckpointVersion,
             "checkpoint: unsupported version in '" + path + "'");

  Checkpoint ckpt;
  std::uint64_t manifest_len = 0;
  check_data(io_detail::read_u64(is, &manifest_len) && manifest_len < (1u << 20),
             "checkpoint: bad manifest length");
  std::string manifest(manifest_len, '\0');
  check_data(static_cast<bool>(is.read(manifest.data(),
                                       static_cast<std::streamsize>(manifest_len))),
             "checkpoint: truncated manifest");
  std::istringstream ms(manifest);
  std::string line;
  while (std::getline(ms, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    ckpt.manifest[line.substr(0, eq)] = line.substr(eq + 3);
  }

  std::uint32_t blobs = 0;
  check_data(io_detail::read_u32(is, &blobs), "checkpoint: truncated blob count");
  for (std::uint32_t b = 0; b < blobs; ++b) {
    std::uint32_t name_len = 0;
    check_data(io_detail::read_u32(is, &name_len) && name_len < 4096,
               "checkpoint: bad blob name length");
    std::string name(name_len, '\0');
    check_data(static_cast<bool>(is.read(name.data(), name_len)),
               "checkpoint: truncated blob name");
    std::uint32_t rank = 0;
    check_data(io_detail::read_u32(is, &rank) && rank <= 8,
               "checkpoint: bad blob rank");
    std::vector<std::size_t> shape(rank);
    for (std::uint32_t r = 0; r < rank; ++r) {
      std::uint32_t ext = 0;
      check_data(io_detail::read_u32(is, &ext), "checkpoint: truncated shape");
      shape[r] = ext;
    }
    std::uint64_t count = 0;
    check_data(io_detail::read_u64(is, &count), "checkpoint: truncated count");
    Tensor t(shape);
    check_data(t.numel() == count, "checkpoint: blob count/shape mismatch");
    for (std::uint64_t i = 0; i < count; ++i)
      check_data(io_detail::read_f64(is, &t[i]),
                 "checkpoint: truncated payload in blob '" + name + "'");
    ckpt.params.add(name, std::move(t));
  }
  return ckpt;
}

// ---- training loop ----

namespace train_detail {

struct ForwardResult {
  Tensor embeddings;  // (N, D)
  std::vector<Encoder::Cache> caches;
};

// Static thread partition: thread t owns a contiguous sample range, so all
// floating-point accumulation orders are fixed regardless of scheduling.
inline void parallel_over(std::size_t n, std::size_t num_threads,
                          const std::function<void(std::size_t, std::size_t,
                                                   std::size_t)>& body) {
  const std::size_t t = std::max<std::size_t>(1, std::min(num_threads, n));
  if (t == 1) {
    body(0, n, 0);
    return;
  }
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < t; ++i) {
    const std::size_t lo = n * i / t, hi = n * (i + 1) / t;
    threads.emplace_back([&body, lo, hi, i] { body(lo, hi, i); });
  }
  for (auto& th : threads) th.join();
}

inline ForwardResult forward_batch(const Encoder& encoder, const ParamSet& params,
                                   const std::vector<BatchItem>& batch,
                                   std::size_t num_threads) {
  ForwardResult r;
  const std::size_t n = batch.size();
  const std::size_t d = encoder.config().embedding_dim;
  r.embeddings = Tensor({n, d});
  r.caches.resize(n);
  parallel_over(n, num_threads, [&](std::size_t lo, std::size_t hi, std::size_t) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Tensor e = encoder.encode(params, batch[i].features, &r.caches[i]);
      std::copy(e.data(), e.data() + d, r.embeddings.data() + i * d);
    }
  });
  return r;
}

inline ParamSet make_grad_shadow(const ParamSet& params) {
  ParamSet shadow;
  for (const auto& e : params.entries()) shadow.add(e.name, Tensor(e.value.shape()));
  return shadow;
}

// In-batch triplet mining: every same-label ordered pair is an
// anchor/positive; the negative is the batch's hardest (most similar to the
// anchor) different-label sample. Returns mean loss and fills d_embeddings.
inline double triplet_batch_loss(const Tensor& embeddings,
                                 const std::vector<std::size_t>& labels,
                                 double margin, Tensor& d_embeddings,
                                 std::size_t* active_out = nullptr,
                                 std::size_t* formed_out = nullptr) {
  const std::size_t n = embeddings.extent(0), d = embeddings.extent(1);
  auto row = [&](std::size_t i) {
    return Tensor({d}, std::vector<double>(embeddings.data() + i * d,
                                           embeddings.data() + (i + 1) * d));
  };

  double loss_total = 0.0;
  std::size_t formed = 0, active = 0;
  d_embeddings = Tensor(embeddings.shape());

  std::vector<Tensor> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i) rows.push_back(row(i));

  for (std::size_t a = 0; a < n; ++a) {
    // Hardest negative: maximal cosine similarity to the anchor.
    std::ptrdiff_t hard = -1;
    double hard_cos = -2.0;
    for (std::size_t m = 0; m < n; ++m) {
      if (labels[m] == labels[a]) continue;
      const double c = dot(rows[a], rows[m]) /
                       std::max(norm2(rows[a]) * norm2(rows[m]), 1e-300);
      if (c > hard_cos) {
        hard_cos = c;
        hard = static_cast<std::ptrdiff_t>(m);
      }
    }
    if (hard < 0) continue;
    for (std::size_t p = 0; p < n; ++p) {
      if (p == a || labels[p] != labels[a]) continue;
      const TripletValue tv =
          triplet_loss(rows[a], rows[p], rows[static_cast<std::size_t>(hard)],
                       margin, true);
      ++formed;
      if (tv.active) ++active;
      loss_total += tv.loss;
      for (std::size_t j = 0; j < d; ++j) {
        d_embeddings.at(a, j) += tv.d_anchor[j];
        d_embeddings.at(p, j) += tv.d_positive[j];
        d_embeddings.at(static_cast<std::size_t>(hard), j) += tv.d_negative[j];
      }
    }
  }

  if (formed > 0) {
    const double inv = 1.0 / static_cast<double>(formed);
    loss_total *= inv;
    for (std::size_t i = 0; i < d_embeddings.numel(); ++i)
      d_embeddings[i] *= inv;
  }
  if (active_out) *active_out = active;
  if (formed_out) *formed_out = formed;
  return loss_total;
}

}  // namespace train_detail

inline Checkpoint make_checkpoint(const TrainConfig& cfg, const ParamSet& params,
                                  bool has_gm) {
  Checkpoint ckpt;
  auto& m = ckpt.manifest;
  m["format"] = "lgm-sv-checkpoint";
  m["loss"] = to_string(cfg.loss);
  m["alpha"] = std::to_string(cfg.alpha);
  m["lambda"] = std::to_string(cfg.lambda);
  m["variance_floor"] = std::to_string(cfg.variance_floor);
  m["triplet_margin"] = std::to_string(cfg.triplet_margin);
  m["seed"] = std::to_string(cfg.seed);
  m["chunk_frames"] = std::to_string(cfg.chunk_frames);
  m["has_gm"] = has_gm ? "1" : "0";
  m["encoder.input_feat_dim"] = std::to_string(cfg.encoder.input_feat_dim);
  std::string channels;
  for (std::size_t i = 0; i < cfg.encoder.block_channels.size(); ++i)
    channels += (i ? "," : "") + std::to_string(cfg.encoder.block_channels[i]);
  m["encoder.block_channels"] = channels;
  m["encoder.blocks_per_stage"] = std::to_string(cfg.encoder.blocks_per_stage);
  m["encoder.transition_filter_h"] =
      std::to_string(cfg.encoder.transition_filter_h);
  m["encoder.transition_filter_w"] =
      std::to_string(cfg.encoder.transition_filter_w);
  m["encoder.transition_stride_h"] =
      std::to_string(cfg.encoder.transition_stride_h);
  m["encoder.transition_stride_w"] =
      std::to_string(cfg.encoder.transition_stride_w);
  m["encoder.block_filter"] = std::to_string(cfg.encoder.block_filter);
  m["encoder.embedding_dim"] = std::to_string(cfg.encoder.embedding_dim);
  m["encoder.min_input_frames"] = std::to_string(cfg.encoder.min_input_frames);
  m["encoder.normalize_embeddings"] =
      cfg.encoder.normalize_embeddings ? "1" : "0";

  for (const auto& e : params.entries()) {
    Tensor copy = e.value;
    ckpt.params.add(e.name, std::move(copy));
  }
  return ckpt;
}

// Joint training of the encoder and (for the L-GM loss) the mixture
// parameters. Deterministic for a fixed (config, corpus, seed): thread count
// does not change results because every accumulation order is static.
inline TrainResult train(const TrainConfig& cfg, const Corpus& train_corpus,
                         const std::string& checkpoint_path) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  const Encoder encoder(cfg.encoder);
  Rng init_rng(cfg.seed);
  ParamSet params = encoder.init_params(init_rng);

  const std::size_t num_speakers = train_corpus.num_speakers();
  const bool use_gm = cfg.loss == LossKind::kLgm;
  if (use_gm) {
    GMParams gm = GMParams::create_seeded(num_speakers,
                                          cfg.encoder.embedding_dim, init_rng);
    params.add("gm.means", gm.means);
    params.add("gm.log_vars", gm.log_variances);
    params.add("gm.priors", gm.priors);  // fixed uniform, excluded from updates
  }

  BatchStream stream(train_corpus, cfg.batch_size, cfg.chunk_frames,
                     cfg.encoder.min_input_frames, cfg.seed);

  OptimizerConfig opt_cfg = cfg.optimizer;
  OptimizerState optimizer(opt_cfg);

  LossConfig loss_cfg;
  loss_cfg.alpha = cfg.alpha;
  loss_cfg.lambda = cfg.lambda;
  loss_cfg.variance_floor = cfg.variance_floor;

  // The optimizer sweeps a dedicated trainable set; priors stay out of it.
  ParamSet trainable;
  for (const auto& e : params.entries())
    if (e.name != "gm.priors") trainable.add(e.name, e.value);

  std::vector<ParamSet> shadows;
  for (std::size_t t = 0; t < cfg.num_threads; ++t)
    shadows.push_back(train_detail::make_grad_shadow(trainable));

  TrainResult result;
  TrainReport& report = result.report;
  std::uint64_t step = 0;
  const double log_floor = std::log(cfg.variance_floor);

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto batches = stream.epoch(epoch);
    double epoch_total = 0.0;
    std::size_t epoch_correct = 0, epoch_samples = 0;

    for (const auto& batch : batches) {
      ++step;
      const std::size_t n = batch.size();
      auto fwd = train_detail::forward_batch(encoder, trainable, batch,
                                             cfg.num_threads);

      std::vector<std::size_t> labels(n);
      for (std::size_t i = 0; i < n; ++i) labels[i] = batch[i].label;

      StepRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      Tensor d_embeddings;

      trainable.zero_grad();
      if (use_gm) {
        GMParams gm;
        gm.means = trainable.value("gm.means");
        gm.log_variances = trainable.value("gm.log_vars");
        gm.priors = params.value("gm.priors");

        Batch b;
        b.embeddings = fwd.embeddings;
        b.labels = labels;

        LossValue value;
        LossGradients grads;
        try {
          grads = lgm_loss_backward(b, gm, loss_cfg, &value);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " at training step " +
                             std::to_string(step));
        }
        rec.total = value.total;
        rec.cls = value.cls;
        rec.lkd = value.lkd;
        d_embeddings = std::move(grads.d_embeddings);
        trainable.grad("gm.means") = std::move(grads.d_means);
        trainable.grad("gm.log_vars") = std::move(grads.d_log_variances);

        for (std::size_t i = 0; i < n; ++i) {
          const Tensor x({gm.dim()},
                         std::vector<double>(fwd.embeddings.data() + i * gm.dim(),
                                             fwd.embeddings.data() +
                                                 (i + 1) * gm.dim()));
          if (classify_train_sample(x, gm, cfg.variance_floor) == labels[i])
            ++epoch_correct;
        }
        epoch_samples += n;
      } else {
        const double loss = train_detail::triplet_batch_loss(
            fwd.embeddings, labels, cfg.triplet_margin, d_embeddings);
        check_numeric(std::isfinite(loss), "non-finite triplet loss at step " +
                                               std::to_string(step));
        rec.total = loss;
        rec.cls = loss;
        rec.lkd = 0.0;
      }

      // Encoder backward, per-thread shadows merged in fixed order.
      const std::size_t d = cfg.encoder.embedding_dim;
      for (auto& s : shadows) s.zero_grad();
      train_detail::parallel_over(
          n, cfg.num_threads, [&](std::size_t lo, std::size_t hi, std::size_t t) {
            for (std::size_t i = lo; i < hi; ++i) {
              const Tensor de({d},
                              std::vector<double>(d_embeddings.data() + i * d,
                                                  d_embeddings.data() +
                                                      (i + 1) * d));
              encoder.encode_backward(trainable, fwd.caches[i], de, shadows[t]);
            }
          });
      for (const auto& s : shadows) trainable.accumulate_grads(s);
      // Shadows also carry gm slots; those gradients were set directly.

      optimizer.step(trainable);

      if (use_gm) {
        // Variance floor after every update.
        Tensor& lv = trainable.value("gm.log_vars");
        for (std::size_t i = 0; i < lv.numel(); ++i)
          if (lv[i] < log_floor) lv[i] = log_floor;
      }

      epoch_total += rec.total;
      report.steps.push_back(rec);
    }

    report.epoch_mean_total.push_back(
        batches.empty() ? 0.0 : epoch_total / static_cast<double>(batches.size()));
    report.epoch_accuracy.push_back(
        use_gm && epoch_samples > 0
            ? static_cast<double>(epoch_correct) / static_cast<double>(epoch_samples)
            : std::numeric_limits<double>::quiet_NaN());

    if (cfg.lr_decay != 1.0)
      optimizer.set_learning_rate(cfg.optimizer.learning_rate *
                                  std::pow(cfg.lr_decay, static_cast<double>(epoch)));

    if (cfg.checkpoint_interval > 0 && epoch % cfg.checkpoint_interval == 0 &&
        epoch != cfg.epochs) {
      Checkpoint snap = make_checkpoint(cfg, trainable, use_gm);
      if (use_gm) snap.params.add("gm.priors", params.value("gm.priors"));
      save_checkpoint(checkpoint_path + ".epoch" + std::to_string(epoch), snap);
    }
  }

  Checkpoint final_ckpt = make_checkpoint(cfg, trainable, use_gm);
  if (use_gm) final_ckpt.params.add("gm.priors", params.value("gm.priors"));
  save_checkpoint(checkpoint_path, final_ckpt);

  result.params = std::move(trainable);
  result.has_gm = use_gm;
  if (use_gm) {
    result.gm.means = result.params.value("gm.means");
    result.gm.log_variances = result.params.value("gm.log_vars");
    result.gm.priors = params.value("gm.priors");
  }
  report.checkpoint_path = checkpoint_path;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start)
          .count();
  return result;
}

}  // namespace lgm

#endif  // LGM_TRAINER_HPP_
