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

#include <unistd.h>

#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>
#include <map>

#include "lgm/corpus.hpp"
#include "lgm/embedding_io.hpp"
#include "lgm/feature_io.hpp"

using namespace lgm;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("lgm_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string str(const std::string& name) const { return (path / name).string(); }
};

std::string read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(is), {});
}

}  // namespace

TEST_CASE("feature file round trip is bit-exact") {
  TempDir dir;
  Rng rng(71);
  Tensor t({13, 7});
  for (std::size_t i = 0; i < t.numel(); ++i)
    t[i] = static_cast<double>(static_cast<float>(rng.normal() * 100.0));
  write_feature_file(dir.str("a.lgmf"), t);
  const Tensor back = read_feature_file(dir.str("a.lgmf"));
  REQUIRE(back.same_shape(t));
  for (std::size_t i = 0; i < t.numel(); ++i) CHECK(back[i] == t[i]);

  // Write-read-write reproduces identical bytes.
  write_feature_file(dir.str("b.lgmf"), back);
  CHECK(read_bytes(dir.str("a.lgmf")) == read_bytes(dir.str("b.lgmf")));
}

TEST_CASE("feature file error paths") {
  TempDir dir;
  SECTION("wrong magic") {
    std::ofstream os(dir.str("bad.lgmf"), std::ios::binary);
    os << "NOPE" << std::string(64, '\0');
    os.close();
    CHECK_THROWS_AS(read_feature_file(dir.str("bad.lgmf")), DataError);
  }
  SECTION("truncated payload") {
    Tensor t({4, 4});
    write_feature_file(dir.str("t.lgmf"), t);
    std::string bytes = read_bytes(dir.str("t.lgmf"));
    std::ofstream os(dir.str("t.lgmf"), std::ios::binary | std::ios::trunc);
    os.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 6));
    os.close();
    CHECK_THROWS_AS(read_feature_file(dir.str("t.lgmf")), DataError);
  }
  SECTION("trailing bytes") {
    Tensor t({2, 2});
    write_feature_file(dir.str("x.lgmf"), t);
    std::ofstream os(dir.str("x.lgmf"), std::ios::binary | std::ios::app);
    os << "zz";
    os.close();
    CHECK_THROWS_AS(read_feature_file(dir.str("x.lgmf")), DataError);
  }
  SECTION("zero-frame write is rejected") {
    // A zero extent cannot even be constructed as a tensor shape.
    CHECK_THROWS_AS(Tensor({0, 4}), ConfigError);
  }
  SECTION("oversized header is rejected") {
    std::ofstream os(dir.str("huge.lgmf"), std::ios::binary);
    os.write(kFeatureMagic, 4);
    io_detail::write_u32(os, kFeatureVersion);
    io_detail::write_u32(os, 0xffffffffu);  // frames
    io_detail::write_u32(os, 0xffffffffu);  // dim
    os.close();
    CHECK_THROWS_AS(read_feature_file(dir.str("huge.lgmf")), DataError);
  }
}

TEST_CASE("synthetic corpus generation") {
  SynthConfig cfg;
  cfg.num_train_speakers = 4;
  cfg.num_test_speakers = 2;
  cfg.utterances_per_speaker = 3;
  cfg.frames_per_utterance = 40;
  cfg.feat_dim = 5;
  cfg.smooth_window = 4;
  cfg.enroll_utterances = 1;
  cfg.seed = 7;

  SECTION("same seed gives byte-identical corpora") {
    TempDir a, b;
    synth_corpus(cfg, a.path.string());
    synth_corpus(cfg, b.path.string());
    for (const auto& entry : fs::recursive_directory_iterator(a.path)) {
      if (!entry.is_regular_file()) continue;
      const auto rel = fs::relative(entry.path(), a.path);
      CHECK(read_bytes(entry.path().string()) ==
            read_bytes((b.path / rel).string()));
    }
  }
  SECTION("zero intra spread collapses frames onto the speaker mean") {
    TempDir dir;
    SynthConfig degenerate = cfg;
    degenerate.intra_speaker_spread = 0.0;
    synth_corpus(degenerate, dir.path.string());
    const Corpus train =
        load_corpus(dir.str("train.manifest"), dir.path.string());
    for (const auto& [spk, utts] : train.speakers) {
      const Tensor first = read_feature_file(train.utterance_path(utts[0]));
      for (const auto& utt : utts) {
        const Tensor f = read_feature_file(train.utterance_path(utt));
        for (std::size_t t = 0; t < f.extent(0); ++t)
          for (std::size_t j = 0; j < f.extent(1); ++j)
            CHECK(f.at(t, j) == first.at(0, j));
      }
    }
  }
  SECTION("train and test splits are disjoint and sized as configured") {
    TempDir dir;
    synth_corpus(cfg, dir.path.string());
    const Corpus train =
        load_corpus(dir.str("train.manifest"), dir.path.string());
    const Corpus test = load_corpus(dir.str("test.manifest"), dir.path.string());
    CHECK(train.num_speakers() == 4);
    CHECK(test.num_speakers() == 2);
    CHECK(train.num_utterances() == 12);
    check_split_disjoint(train, test);  // must not throw
  }
  SECTION("overlapping splits are rejected") {
    TempDir dir;
    synth_corpus(cfg, dir.path.string());
    const Corpus train =
        load_corpus(dir.str("train.manifest"), dir.path.string());
    CHECK_THROWS_AS(check_split_disjoint(train, train), DataError);
  }
  SECTION("nearest-centroid oracle separates speakers at spread ratio 10") {
    TempDir dir;
    SynthConfig separated = cfg;
    separated.num_train_speakers = 8;
    separated.utterances_per_speaker = 6;
    separated.inter_speaker_spread = 1.0;
    separated.intra_speaker_spread = 0.1;
    synth_corpus(separated, dir.path.string());
    const Corpus train =
        load_corpus(dir.str("train.manifest"), dir.path.string());

    // Centroids from the first half of each speaker's utterances, evaluated
    // on the held-out second half by frame-mean nearest centroid.
    std::map<std::string, Tensor> centroids;
    std::vector<std::pair<std::string, Tensor>> held_out;
    for (const auto& [spk, utts] : train.speakers) {
      Tensor centroid({separated.feat_dim});
      std::size_t used = 0;
      for (std::size_t i = 0; i < utts.size(); ++i) {
        const Tensor f = read_feature_file(train.utterance_path(utts[i]));
        const Tensor frame_mean = mean(f, 0);
        if (i < utts.size() / 2) {
          for (std::size_t j = 0; j < centroid.numel(); ++j)
            centroid[j] += frame_mean[j];
          ++used;
        } else {
          held_out.emplace_back(spk, frame_mean);
        }
      }
      for (std::size_t j = 0; j < centroid.numel(); ++j)
        centroid[j] /= static_cast<double>(used);
      centroids[spk] = centroid;
    }
    std::size_t correct = 0;
    for (const auto& [spk, v] : held_out) {
      std::string best;
      double best_d = 1e300;
      for (const auto& [cand, c] : centroids) {
        double d = 0.0;
        for (std::size_t j = 0; j < v.numel(); ++j)
          d += (v[j] - c[j]) * (v[j] - c[j]);
        if (d < best_d) {
          best_d = d;
          best = cand;
        }
      }
      correct += best == spk ? 1 : 0;
    }
    CHECK(static_cast<double>(correct) / static_cast<double>(held_out.size()) >
          0.99);
  }
}

TEST_CASE("batch stream") {
  TempDir dir;
  SynthConfig cfg;
  cfg.num_train_speakers = 3;
  cfg.num_test_speakers = 2;
  cfg.utterances_per_speaker = 4;
  cfg.frames_per_utterance = 50;
  cfg.feat_dim = 5;
  cfg.enroll_utterances = 1;
  synth_corpus(cfg, dir.path.string());
  const Corpus train = load_corpus(dir.str("train.manifest"), dir.path.string());

  SECTION("batch size one and crop length") {
    BatchStream stream(train, 1, 20, 10, 5);
    const auto batches = stream.epoch(1);
    REQUIRE(batches.size() == 12);
    for (const auto& b : batches) {
      REQUIRE(b.size() == 1);
      CHECK(b[0].features.extent(0) == 20);
      CHECK(b[0].label < 3);
    }
  }
  SECTION("same seed and epoch reproduce batches exactly") {
    BatchStream s1(train, 4, 20, 10, 5);
    BatchStream s2(train, 4, 20, 10, 5);
    const auto b1 = s1.epoch(2), b2 = s2.epoch(2);
    REQUIRE(b1.size() == b2.size());
    for (std::size_t i = 0; i < b1.size(); ++i)
      for (std::size_t j = 0; j < b1[i].size(); ++j) {
        CHECK(b1[i][j].label == b2[i][j].label);
        for (std::size_t v = 0; v < b1[i][j].features.numel(); ++v)
          CHECK(b1[i][j].features[v] == b2[i][j].features[v]);
      }
  }
  SECTION("epoch label histogram matches utterance counts") {
    BatchStream stream(train, 5, 25, 10, 9);
    std::map<std::size_t, std::size_t> histogram;
    for (const auto& b : stream.epoch(3))
      for (const auto& item : b) ++histogram[item.label];
    REQUIRE(histogram.size() == 3);
    for (const auto& [label, count] : histogram) CHECK(count == 4);
  }
  SECTION("different epochs shuffle differently") {
    BatchStream stream(train, 12, 20, 10, 5);
    const auto e1 = stream.epoch(1), e2 = stream.epoch(2);
    bool any_diff = false;
    for (std::size_t j = 0; j < e1[0].size(); ++j)
      any_diff = any_diff || e1[0][j].label != e2[0][j].label ||
                 e1[0][j].features[0] != e2[0][j].features[0];
    CHECK(any_diff);
  }
}

TEST_CASE("embedding text file round trip") {
  TempDir dir;
  Rng rng(72);
  std::vector<std::pair<std::string, Tensor>> embs;
  for (int i = 0; i < 5; ++i)
    embs.emplace_back("utt" + std::to_string(i), Tensor::randn({6}, rng));
  write_embeddings_text(dir.str("e.txt"), embs);
  const auto back = read_embeddings_text(dir.str("e.txt"));
  REQUIRE(back.size() == 5);
  for (const auto& [id, e] : embs) {
    REQUIRE(back.count(id) == 1);
    for (std::size_t j = 0; j < e.numel(); ++j) CHECK(back.at(id)[j] == e[j]);
  }
}

TEST_CASE("embedding binary variant reuses the feature container") {
  TempDir dir;
  Rng rng(73);
  std::vector<std::pair<std::string, Tensor>> embs;
  for (int i = 0; i < 3; ++i) {
    Tensor e = Tensor::randn({4}, rng);
    for (std::size_t j = 0; j < e.numel(); ++j)
      e[j] = static_cast<double>(static_cast<float>(e[j]));
    embs.emplace_back("spk" + std::to_string(i), e);
  }
  write_embeddings_binary(dir.str("bin"), embs);
  const auto back = read_embeddings_binary(dir.str("bin"));
  REQUIRE(back.size() == 3);
  for (const auto& [id, e] : embs)
    for (std::size_t j = 0; j < e.numel(); ++j) CHECK(back.at(id)[j] == e[j]);
}

TEST_CASE("trial list parsing") {
  TempDir dir;
  {
    std::ofstream os(dir.str("trials.txt"));
    os << "1 spkA uttX\n0 spkA uttY\n";
  }
  const auto trials = read_trials(dir.str("trials.txt"));
  REQUIRE(trials.size() == 2);
  CHECK(trials[0].target);
  CHECK_FALSE(trials[1].target);
  CHECK(trials[0].enroll_speaker == "spkA");
  CHECK(trials[1].test_utterance == "uttY");

  {
    std::ofstream os(dir.str("bad.txt"));
    os << "2 spkA uttX\n";
  }
  CHECK_THROWS_AS(read_trials(dir.str("bad.txt")), DataError);
}
