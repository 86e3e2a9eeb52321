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

#ifndef LGM_PIPELINE_HPP_
#define LGM_PIPELINE_HPP_

#include <string>
#include <vector>

#include "lgm/encoder.hpp"
#include "lgm/gm_loss.hpp"
#include "lgm/tensor.hpp"

namespace lgm {

struct Utterance {
  std::string id;
  Tensor features;      // (frames, feat_dim)
  double frame_rate = 100.0;  // frames per second, metadata only

  std::size_t frames() const { return features.extent(0); }
};

struct SpeakerModel {
  std::string speaker_id;
  Tensor embedding;
  std::size_t utterance_count = 0;
};

// Consecutive non-overlapping windows of chunk_frames. A final shorter
// remainder is kept as its own chunk when it meets the encoder minimum,
// otherwise it is merged into the previous chunk; an utterance shorter than
// chunk_frames yields a single chunk covering the whole utterance.
inline std::vector<Tensor> chunk(const Utterance& utt, std::size_t chunk_frames,
                                 std::size_t min_frames) {
  check_config(chunk_frames >= min_frames,
               "chunk: chunk_frames below encoder minimum");
  const std::size_t total = utt.frames();
  const std::size_t dim = utt.features.extent(1);
  check_data(total >= min_frames,
             "chunk: utterance '" + utt.id + "' shorter than encoder minimum");

  std::vector<std::pair<std::size_t, std::size_t>> spans;  // (start, len)
  if (total <= chunk_frames) {
    spans.emplace_back(0, total);
  } else {
    std::size_t start = 0;
    while (start + chunk_frames <= total) {
      spans.emplace_back(start, chunk_frames);
      start += chunk_frames;
    }
    const std::size_t rem = total - start;
    if (rem > 0) {
      if (rem >= min_frames)
        spans.emplace_back(start, rem);
      else
        spans.back().second += rem;
    }
  }

  std::vector<Tensor> out;
  out.reserve(spans.size());
  for (auto [start, len] : spans) {
    out.emplace_back(
        std::vector<std::size_t>{len, dim},
        std::vector<double>(utt.features.data() + start * dim,
                            utt.features.data() + (start + len) * dim));
  }
  return out;
}

namespace detail {

inline Tensor renormalize(Tensor v, bool unit_norm) {
  if (!unit_norm) return v;
  const double n = norm2(v);
  check_numeric(n > 0.0, "pipeline: zero-norm embedding");
  for (std::size_t i = 0; i < v.numel(); ++i) v[i] /= n;
  return v;
}

}  // namespace detail

// Mean of chunk embeddings, re-normalized to unit norm (aggregation by
// averaging mirrors the enrollment rule).
inline Tensor utterance_embedding(const Encoder& encoder, const ParamSet& params,
                                  const Utterance& utt,
                                  std::size_t chunk_frames) {
  const auto chunks = chunk(utt, chunk_frames, encoder.config().min_input_frames);
  Tensor acc({encoder.config().embedding_dim});
  for (const Tensor& c : chunks) {
    const Tensor e = encoder.encode(params, c);
    for (std::size_t i = 0; i < acc.numel(); ++i) acc[i] += e[i];
  }
  for (std::size_t i = 0; i < acc.numel(); ++i)
    acc[i] /= static_cast<double>(chunks.size());
  return detail::renormalize(std::move(acc),
                             encoder.config().normalize_embeddings);
}

// Mean of utterance embeddings, re-normalized.
inline SpeakerModel enroll(const Encoder& encoder, const ParamSet& params,
                           const std::string& speaker_id,
                           const std::vector<Utterance>& utterances,
                           std::size_t chunk_frames) {
  check_data(!utterances.empty(), "enroll: empty utterance list for speaker '" +
                                      speaker_id + "'");
  Tensor acc({encoder.config().embedding_dim});
  for (const Utterance& u : utterances) {
    const Tensor e = utterance_embedding(encoder, params, u, chunk_frames);
    for (std::size_t i = 0; i < acc.numel(); ++i) acc[i] += e[i];
  }
  for (std::size_t i = 0; i < acc.numel(); ++i)
    acc[i] /= static_cast<double>(utterances.size());
  SpeakerModel model;
  model.speaker_id = speaker_id;
  model.embedding = detail::renormalize(std::move(acc),
                                        encoder.config().normalize_embeddings);
  model.utterance_count = utterances.size();
  return model;
}

enum class ScoreMethod { kCosine, kNegMahalanobis };

inline ScoreMethod score_method_from_string(const std::string& s) {
  if (s == "cosine") return ScoreMethod::kCosine;
  if (s == "neg_mahalanobis") return ScoreMethod::kNegMahalanobis;
  throw ConfigError("unknown scoring method '" + s +
                    "' (expected cosine|neg_mahalanobis)");
}

inline double cosine_score(const Tensor& a, const Tensor& b) {
  check_config(a.numel() == b.numel(), "score: dimension mismatch");
  const double na = norm2(a), nb = norm2(b);
  check_numeric(na > 0.0 && nb > 0.0, "score: zero-norm embedding");
  return dot(a, b) / (na * nb);
}

// Pooled whitening diagonal for scoring under the training metric: the
// average of the per-class variances.
inline Tensor pooled_variances(const GMParams& gm, double variance_floor = 1e-6) {
  const std::size_t num_classes = gm.num_classes(), d = gm.dim();
  Tensor pooled({d});
  for (std::size_t k = 0; k < num_classes; ++k)
    for (std::size_t j = 0; j < d; ++j)
      pooled[j] +=
          std::max(std::exp(gm.log_variances.at(k, j)), variance_floor);
  for (std::size_t j = 0; j < d; ++j)
    pooled[j] /= static_cast<double>(num_classes);
  return pooled;
}

// Negative squared Mahalanobis distance (with the factor 1/2) under a
// diagonal whitening; higher means more similar.
inline double neg_mahalanobis_score(const Tensor& a, const Tensor& b,
                                    const Tensor& whitening_variances) {
  check_config(a.numel() == b.numel(), "score: dimension mismatch");
  check_config(whitening_variances.numel() == a.numel(),
               "score: whitening dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    const double diff = a[i] - b[i];
    acc += diff * diff / whitening_variances[i];
  }
  return -0.5 * acc;
}

inline double score(const SpeakerModel& enrolled, const Tensor& test,
                    ScoreMethod method,
                    const Tensor* whitening_variances = nullptr) {
  switch (method) {
    case ScoreMethod::kCosine:
      return cosine_score(enrolled.embedding, test);
    case ScoreMethod::kNegMahalanobis:
      check_config(whitening_variances != nullptr,
                   "score: neg_mahalanobis requires trained GM parameters");
      return neg_mahalanobis_score(enrolled.embedding, test,
                                   *whitening_variances);
  }
  throw ConfigError("score: unknown method");
}

}  // namespace lgm

#endif  // LGM_PIPELINE_HPP_
