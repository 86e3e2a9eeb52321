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

#ifndef LGM_CORPUS_HPP_
#define LGM_CORPUS_HPP_

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "lgm/feature_io.hpp"
#include "lgm/rng.hpp"
#include "lgm/tensor.hpp"

namespace lgm {

// One manifest line: <speaker_id> <utterance_id> <relative_path>.
struct ManifestEntry {
  std::string speaker_id;
  std::string utterance_id;
  std::string relative_path;
};

struct Corpus {
  std::map<std::string, std::vector<std::string>> speakers;  // id -> utt ids
  std::map<std::string, std::string> utterance_paths;        // utt id -> rel path
  std::string feature_dir;

  std::size_t num_speakers() const { return speakers.size(); }

  std::size_t num_utterances() const { return utterance_paths.size(); }

  // Speaker index assignment is the sorted order of speaker ids, so labels
  // are stable across runs and machines.
  std::vector<std::string> speaker_ids() const {
    std::vector<std::string> ids;
    ids.reserve(speakers.size());
    for (const auto& [id, utts] : speakers) ids.push_back(id);
    return ids;
  }

  std::string utterance_path(const std::string& utt_id) const {
    auto it = utterance_paths.find(utt_id);
    check_data(it != utterance_paths.end(),
               "corpus: unknown utterance '" + utt_id + "'");
    return (std::filesystem::path(feature_dir) / it->second).string();
  }
};

inline std::vector<ManifestEntry> read_manifest(const std::string& path) {
  std::ifstream is(path);
  check_data(is.good(), "manifest: cannot open '" + path + "'");
  std::vector<ManifestEntry> entries;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    ManifestEntry e;
    check_data(static_cast<bool>(ls >> e.speaker_id >> e.utterance_id >>
                                 e.relative_path),
               "manifest: malformed line " + std::to_string(line_no) + " in '" +
                   path + "'");
    entries.push_back(std::move(e));
  }
  return entries;
}

inline void write_manifest(const std::string& path,
                           const std::vector<ManifestEntry>& entries) {
  std::ofstream os(path, std::ios::trunc);
  check_data(os.good(), "manifest: cannot open '" + path + "' for writing");
  for (const auto& e : entries)
    os << e.speaker_id << ' ' << e.utterance_id << ' ' << e.relative_path
       << '\n';
  check_data(os.good(), "manifest: short write to '" + path + "'");
}

inline Corpus load_corpus(const std::string& manifest_path,
                          const std::string& feature_dir) {
  Corpus c;
  c.feature_dir = feature_dir;
  for (const auto& e : read_manifest(manifest_path)) {
    check_data(c.utterance_paths.find(e.utterance_id) == c.utterance_paths.end(),
               "corpus: duplicate utterance id '" + e.utterance_id + "'");
    c.speakers[e.speaker_id].push_back(e.utterance_id);
    c.utterance_paths[e.utterance_id] = e.relative_path;
  }
  return c;
}

// Train/test speaker sets must be disjoint; overlap is an error, never a
// warning.
inline void check_split_disjoint(const Corpus& train, const Corpus& test) {
  for (const auto& [id, utts] : test.speakers)
    check_data(train.speakers.find(id) == train.speakers.end(),
               "corpus: speaker '" + id + "' appears in both train and test");
}

// ---- synthetic corpus generation ----

// Desk-scale surrogate for a real corpus: each speaker is a Gaussian
// cluster in feature space. Frames are temporally smoothed so chunk-level
// embeddings actually vary within an utterance.
struct SynthConfig {
  std::size_t num_train_speakers = 20;
  std::size_t num_test_speakers = 8;
  std::size_t utterances_per_speaker = 10;
  std::size_t frames_per_utterance = 220;
  std::size_t feat_dim = 20;
  double inter_speaker_spread = 1.0;
  double intra_speaker_spread = 0.1;
  std::size_t smooth_window = 16;
  double frame_rate = 5.0;  // frames per second, recorded as metadata
  std::size_t enroll_utterances = 3;  // per test speaker, for the trial list
  std::uint64_t seed = 7;

  void validate() const {
    check_config(num_train_speakers >= 2,
                 "synth: verification needs at least 2 train speakers");
    check_config(num_test_speakers >= 2,
                 "synth: verification needs at least 2 test speakers");
    check_config(utterances_per_speaker >= 1, "synth: utterances per speaker");
    check_config(frames_per_utterance >= 1, "synth: frames per utterance");
    check_config(feat_dim >= 1, "synth: feat_dim");
    check_config(inter_speaker_spread > 0.0, "synth: inter spread must be > 0");
    check_config(intra_speaker_spread >= 0.0, "synth: intra spread must be >= 0");
    check_config(smooth_window >= 1, "synth: smoothing window");
    check_config(enroll_utterances >= 1 &&
                     enroll_utterances < utterances_per_speaker,
                 "synth: enroll utterances must leave test utterances");
  }
};

struct TrialLine {
  bool target = false;
  std::string enroll_speaker;
  std::string test_utterance;
};

namespace synth_detail {

// Moving average over a trailing window with sqrt(w) compensation, so the
// per-frame variance stays at intra_spread^2 while frames become correlated
// over roughly the window length.
inline Tensor smoothed_noise(std::size_t frames, std::size_t dim,
                             std::size_t window, Rng& rng) {
  Tensor raw({frames + window - 1, dim});
  for (std::size_t i = 0; i < raw.numel(); ++i) raw[i] = rng.normal();
  Tensor out({frames, dim});
  const double comp = std::sqrt(static_cast<double>(window)) /
                      static_cast<double>(window);
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t j = 0; j < dim; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < window; ++k) acc += raw.at(t + k, j);
      out.at(t, j) = acc * comp;
    }
  return out;
}

inline std::string speaker_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03zu", prefix, i);
  return buf;
}

}  // namespace synth_detail

struct SynthOutput {
  std::vector<ManifestEntry> train;
  std::vector<ManifestEntry> test;     // all utterances of test speakers
  std::vector<ManifestEntry> enroll;   // enrollment subset of test
  std::vector<ManifestEntry> trial_side;  // test-side subset (non-enroll)
  std::vector<TrialLine> trials;
};

// Generates feature files under <out_dir>/features plus manifests and the
// verification trial list. Pure function of the config: the same seed gives
// byte-identical output trees.
inline SynthOutput synth_corpus(const SynthConfig& cfg,
                                const std::string& out_dir) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "features");

  Rng rng(cfg.seed);
  SynthOutput out;

  auto gen_speaker = [&](const std::string& speaker,
                         std::vector<ManifestEntry>& sink) {
    Tensor mean({cfg.feat_dim});
    for (std::size_t j = 0; j < cfg.feat_dim; ++j)
      mean[j] = rng.normal(0.0, cfg.inter_speaker_spread);
    for (std::size_t u = 0; u < cfg.utterances_per_speaker; ++u) {
      const std::string utt_id = speaker + "_u" + std::to_string(u);
      Tensor features({cfg.frames_per_utterance, cfg.feat_dim});
      if (cfg.intra_speaker_spread > 0.0) {
        features = synth_detail::smoothed_noise(cfg.frames_per_utterance,
                                                cfg.feat_dim, cfg.smooth_window,
                                                rng);
        for (std::size_t i = 0; i < features.numel(); ++i)
          features[i] *= cfg.intra_speaker_spread;
      }
      for (std::size_t t = 0; t < cfg.frames_per_utterance; ++t)
        for (std::size_t j = 0; j < cfg.feat_dim; ++j)
          features.at(t, j) += mean[j];
      const std::string rel = "features/" + utt_id + ".lgmf";
      write_feature_file((fs::path(out_dir) / rel).string(), features);
      sink.push_back({speaker, utt_id, rel});
    }
  };

  for (std::size_t s = 0; s < cfg.num_train_speakers; ++s)
    gen_speaker(synth_detail::speaker_name("trn", s), out.train);
  for (std::size_t s = 0; s < cfg.num_test_speakers; ++s)
    gen_speaker(synth_detail::speaker_name("tst", s), out.test);

  // Enrollment gets the first utterances of each test speaker; the rest are
  // the test side of the trials. Every (enroll speaker, test utterance)
  // pair becomes a trial.
  for (const auto& e : out.test) {
    const std::size_t utt_idx = std::stoul(e.utterance_id.substr(
        e.utterance_id.find("_u") + 2));
    (utt_idx < cfg.enroll_utterances ? out.enroll : out.trial_side).push_back(e);
  }
  for (std::size_t s = 0; s < cfg.num_test_speakers; ++s) {
    const std::string enroll_speaker = synth_detail::speaker_name("tst", s);
    for (const auto& t : out.trial_side)
      out.trials.push_back(
          {t.speaker_id == enroll_speaker, enroll_speaker, t.utterance_id});
  }

  write_manifest((fs::path(out_dir) / "train.manifest").string(), out.train);
  write_manifest((fs::path(out_dir) / "test.manifest").string(), out.test);
  write_manifest((fs::path(out_dir) / "enroll.manifest").string(), out.enroll);
  write_manifest((fs::path(out_dir) / "trial_side.manifest").string(),
                 out.trial_side);

  std::ofstream trials((fs::path(out_dir) / "trials.txt").string(),
                       std::ios::trunc);
  for (const auto& t : out.trials)
    trials << (t.target ? 1 : 0) << ' ' << t.enroll_speaker << ' '
           << t.test_utterance << '\n';
  check_data(trials.good(), "synth: short write to trials.txt");

  std::ofstream meta((fs::path(out_dir) / "meta.txt").string(), std::ios::trunc);
  meta << "seed = " << cfg.seed << '\n'
       << "train_speakers = " << cfg.num_train_speakers << '\n'
       << "test_speakers = " << cfg.num_test_speakers << '\n'
       << "utterances_per_speaker = " << cfg.utterances_per_speaker << '\n'
       << "frames_per_utterance = " << cfg.frames_per_utterance << '\n'
       << "feat_dim = " << cfg.feat_dim << '\n'
       << "inter_speaker_spread = " << cfg.inter_speaker_spread << '\n'
       << "intra_speaker_spread = " << cfg.intra_speaker_spread << '\n'
       << "smooth_window = " << cfg.smooth_window << '\n'
       << "frame_rate = " << cfg.frame_rate << '\n'
       << "enroll_utterances = " << cfg.enroll_utterances << '\n';
  check_data(meta.good(), "synth: short write to meta.txt");
  return out;
}

// ---- minibatch assembly ----

struct BatchItem {
  std::size_t label = 0;   // train-split speaker index
  Tensor features;          // (crop_frames, feat_dim)
};

// Deterministic epoch stream: utterances shuffled per (seed, epoch), one
// fixed-length random crop per utterance. Labels index the sorted speaker
// list of the train split.
class BatchStream {
 public:
  BatchStream(const Corpus& corpus, std::size_t batch_size,
              std::size_t crop_frames, std::size_t min_frames,
              std::uint64_t seed)
      : batch_size_(batch_size),
        crop_frames_(crop_frames),
        min_frames_(min_frames),
        seed_(seed) {
    check_config(batch_size_ >= 1, "batches: batch_size must be >= 1");
    check_data(corpus.num_utterances() > 0, "batches: empty train split");
    const auto ids = corpus.speaker_ids();
    for (std::size_t i = 0; i < ids.size(); ++i) {
      for (const std::string& utt : corpus.speakers.at(ids[i])) {
        Item item;
        item.label = i;
        item.utterance_id = utt;
        item.features = read_feature_file(corpus.utterance_path(utt));
        check_data(item.features.extent(0) >= min_frames_,
                   "batches: utterance '" + utt + "' shorter than encoder minimum");
        items_.push_back(std::move(item));
      }
    }
    num_speakers_ = ids.size();
  }

  std::size_t num_speakers() const { return num_speakers_; }
  std::size_t utterances_per_epoch() const { return items_.size(); }

  // All batches of one epoch; the trailing partial batch is kept.
  std::vector<std::vector<BatchItem>> epoch(std::size_t epoch_index) const {
    Rng rng(seed_ ^ (0x9e3779b97f4a7c15ull * (epoch_index + 1)));
    std::vector<std::size_t> order(items_.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    // Fisher-Yates with the local stream.
    for (std::size_t i = order.size(); i > 1; --i) {
      const std::size_t j = rng.uniform_index(i);
      std::swap(order[i - 1], order[j]);
    }

    std::vector<std::vector<BatchItem>> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size_) {
      const std::size_t end = std::min(order.size(), start + batch_size_);
      std::vector<BatchItem> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const Item& item = items_[order[i]];
        const std::size_t total = item.features.extent(0);
        const std::size_t dim = item.features.extent(1);
        const std::size_t crop = std::min(crop_frames_, total);
        const std::size_t max_start = total - crop;
        const std::size_t s =
            max_start == 0 ? 0 : rng.uniform_index(max_start + 1);
        BatchItem out;
        out.label = item.label;
        out.features =
            Tensor({crop, dim},
                   std::vector<double>(item.features.data() + s * dim,
                                       item.features.data() + (s + crop) * dim));
        batch.push_back(std::move(out));
      }
      batches.push_back(std::move(batch));
    }
    return batches;
  }

 private:
  struct Item {
    std::size_t label = 0;
    std::string utterance_id;
    Tensor features;
  };

  std::vector<Item> items_;
  std::size_t num_speakers_ = 0;
  std::size_t batch_size_;
  std::size_t crop_frames_;
  std::size_t min_frames_;
  std::uint64_t seed_;
};

// ---- trial list and score file formats ----

inline std::vector<TrialLine> read_trials(const std::string& path) {
  std::ifstream is(path);
  check_data(is.good(), "trials: cannot open '" + path + "'");
  std::vector<TrialLine> trials;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    int label;
    TrialLine t;
    check_data(static_cast<bool>(ls >> label >> t.enroll_speaker >>
                                 t.test_utterance) &&
                   (label == 0 || label == 1),
               "trials: malformed line " + std::to_string(line_no) + " in '" +
                   path + "'");
    t.target = label == 1;
    trials.push_back(std::move(t));
  }
  check_data(!trials.empty(), "trials: no trials in '" + path + "'");
  return trials;
}

}  // namespace lgm

#endif  // LGM_CORPUS_HPP_
