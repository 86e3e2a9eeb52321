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
// Command-line surface for the full pipeline: synth, train, embed, enroll,
// score, eval, gradcheck. Options can come from a plain-text config file
// ([section] key = value); command-line flags win. Exit codes: 0 success,
// 1 usage/config error, 2 data error, 3 numerical failure.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lgm/corpus.hpp"
#include "lgm/embedding_io.hpp"
#include "lgm/encoder.hpp"
#include "lgm/evaluation.hpp"
#include "lgm/finite_diff.hpp"
#include "lgm/gm_loss.hpp"
#include "lgm/pipeline.hpp"
#include "lgm/trainer.hpp"

namespace fs = std::filesystem;
using namespace lgm;

namespace {

struct SynthArgs {
  std::string out;
  SynthConfig cfg;
};

struct TrainArgs {
  std::string corpus_dir;
  std::string out;
  std::string report;
  std::string loss = "lgm";
  std::string optimizer = "adam";
  TrainConfig cfg;
  std::string channels = "8,16,32";
  bool no_normalize = false;
  std::size_t feat_dim = 0;  // 0 = infer from the corpus
};

struct EmbedArgs {
  std::string checkpoint;
  std::string manifest;
  std::string features_dir;
  std::string out;
  std::string binary_dir;
  std::size_t chunk_frames = 0;  // 0 = checkpoint default
};

struct ScoreArgs {
  std::string enroll_file;
  std::string test_file;
  std::string trials;
  std::string out;
  std::string method = "cosine";
  std::string checkpoint;
};

struct EvalArgs {
  std::string trials;
  std::string scores;
  std::string det;
};

struct GradcheckArgs {
  std::uint64_t seed = 7;
  std::size_t cases = 100;
  double tolerance = 1e-4;
  std::string inject_fault;  // test hook: corrupts one analytic gradient
};

std::vector<std::size_t> parse_channels(const std::string& s) {
  std::vector<std::size_t> out;
  std::istringstream is(s);
  std::string tok;
  while (std::getline(is, tok, ',')) {
    check_config(!tok.empty(), "train: empty channel entry in '" + s + "'");
    out.push_back(std::stoull(tok));
  }
  check_config(!out.empty(), "train: no channels given");
  return out;
}

int run_synth(const SynthArgs& args) {
  synth_corpus(args.cfg, args.out);
  std::printf("synth: wrote corpus to %s (seed %llu)\n", args.out.c_str(),
              static_cast<unsigned long long>(args.cfg.seed));
  return 0;
}

int run_train(TrainArgs& args) {
  const Corpus train_split = load_corpus(
      (fs::path(args.corpus_dir) / "train.manifest").string(), args.corpus_dir);
  // The held-out split only has to exist to be checked for disjointness.
  const auto test_manifest = fs::path(args.corpus_dir) / "test.manifest";
  if (fs::exists(test_manifest)) {
    const Corpus test_split =
        load_corpus(test_manifest.string(), args.corpus_dir);
    check_split_disjoint(train_split, test_split);
  }

  args.cfg.loss = loss_kind_from_string(args.loss);
  args.cfg.optimizer.kind = optimizer_kind_from_string(args.optimizer);
  args.cfg.encoder.block_channels = parse_channels(args.channels);
  args.cfg.encoder.normalize_embeddings = !args.no_normalize;
  if (args.feat_dim > 0) {
    args.cfg.encoder.input_feat_dim = args.feat_dim;
  } else {
    const auto& first_utt = train_split.utterance_paths.begin();
    check_data(first_utt != train_split.utterance_paths.end(),
               "train: empty corpus");
    args.cfg.encoder.input_feat_dim =
        read_feature_file(train_split.utterance_path(first_utt->first)).extent(1);
  }

  const TrainResult result = train(args.cfg, train_split, args.out);

  const std::string report_path =
      args.report.empty() ? args.out + ".report.csv" : args.report;
  {
    std::ofstream os(report_path, std::ios::trunc);
    check_data(os.good(), "train: cannot open report '" + report_path + "'");
    os << "step,epoch,total,cls,lkd\n";
    char buf[128];
    for (const auto& s : result.report.steps) {
      std::snprintf(buf, sizeof buf, "%llu,%zu,%.12g,%.12g,%.12g\n",
                    static_cast<unsigned long long>(s.step), s.epoch, s.total,
                    s.cls, s.lkd);
      os << buf;
    }
  }
  {
    std::ofstream os(report_path + ".meta", std::ios::trunc);
    os << "checkpoint = " << result.report.checkpoint_path << '\n';
    os << "seed = " << args.cfg.seed << '\n';
    os << "wall_seconds = " << result.report.wall_seconds << '\n';
    for (std::size_t e = 0; e < result.report.epoch_accuracy.size(); ++e)
      os << "epoch" << (e + 1)
         << ".train_accuracy = " << result.report.epoch_accuracy[e] << '\n';
    for (std::size_t e = 0; e < result.report.epoch_mean_total.size(); ++e)
      os << "epoch" << (e + 1)
         << ".mean_total = " << result.report.epoch_mean_total[e] << '\n';
  }
  std::printf("train: %zu steps, final epoch mean loss %.6f, checkpoint %s\n",
              result.report.steps.size(),
              result.report.epoch_mean_total.back(), args.out.c_str());
  return 0;
}

struct LoadedModel {
  Checkpoint ckpt;
  Encoder encoder;
  std::size_t chunk_frames;

  explicit LoadedModel(const std::string& path, std::size_t chunk_override)
      : ckpt(load_checkpoint(path)),
        encoder(ckpt.encoder_config()),
        chunk_frames(chunk_override > 0 ? chunk_override
                                        : ckpt.get_uint("chunk_frames")) {}
};

Utterance load_utterance(const Corpus& corpus, const std::string& utt_id) {
  Utterance u;
  u.id = utt_id;
  u.features = read_feature_file(corpus.utterance_path(utt_id));
  return u;
}

int run_embed(const EmbedArgs& args) {
  const LoadedModel model(args.checkpoint, args.chunk_frames);
  const Corpus corpus = load_corpus(args.manifest, args.features_dir);

  std::vector<std::pair<std::string, Tensor>> embeddings;
  for (const auto& [utt_id, rel] : corpus.utterance_paths) {
    const Utterance u = load_utterance(corpus, utt_id);
    embeddings.emplace_back(utt_id, utterance_embedding(model.encoder,
                                                        model.ckpt.params, u,
                                                        model.chunk_frames));
  }
  if (!args.out.empty()) write_embeddings_text(args.out, embeddings);
  if (!args.binary_dir.empty())
    write_embeddings_binary(args.binary_dir, embeddings);
  std::printf("embed: wrote %zu embeddings\n", embeddings.size());
  return 0;
}

int run_enroll(const EmbedArgs& args) {
  const LoadedModel model(args.checkpoint, args.chunk_frames);
  const Corpus corpus = load_corpus(args.manifest, args.features_dir);

  std::vector<std::pair<std::string, Tensor>> models;
  for (const auto& [speaker, utt_ids] : corpus.speakers) {
    std::vector<Utterance> utts;
    utts.reserve(utt_ids.size());
    for (const auto& id : utt_ids) utts.push_back(load_utterance(corpus, id));
    const SpeakerModel m = enroll(model.encoder, model.ckpt.params, speaker,
                                  utts, model.chunk_frames);
    models.emplace_back(speaker, m.embedding);
  }
  if (!args.out.empty()) write_embeddings_text(args.out, models);
  if (!args.binary_dir.empty()) write_embeddings_binary(args.binary_dir, models);
  std::printf("enroll: wrote %zu speaker models\n", models.size());
  return 0;
}

void report_missing(const std::vector<std::string>& missing, const char* side) {
  if (missing.empty()) return;
  std::string msg = std::string("score: ") + std::to_string(missing.size()) +
                    " " + side + " ids missing from embeddings:";
  for (std::size_t i = 0; i < missing.size() && i < 10; ++i)
    msg += " " + missing[i];
  throw DataError(msg);
}

int run_score(const ScoreArgs& args) {
  const auto enrolled = read_embeddings_text(args.enroll_file);
  const auto tests = read_embeddings_text(args.test_file);
  const auto trials = read_trials(args.trials);

  const ScoreMethod method = score_method_from_string(args.method);
  Tensor whitening;
  if (method == ScoreMethod::kNegMahalanobis) {
    check_config(!args.checkpoint.empty(),
                 "score: neg_mahalanobis needs --checkpoint for the GM whitening");
    const Checkpoint ckpt = load_checkpoint(args.checkpoint);
    whitening = pooled_variances(ckpt.gm());
  }

  std::vector<std::string> missing_enroll, missing_test;
  for (const auto& t : trials) {
    if (enrolled.find(t.enroll_speaker) == enrolled.end())
      missing_enroll.push_back(t.enroll_speaker);
    if (tests.find(t.test_utterance) == tests.end())
      missing_test.push_back(t.test_utterance);
  }
  report_missing(missing_enroll, "enroll");
  report_missing(missing_test, "test");

  std::ofstream os(args.out, std::ios::trunc);
  check_data(os.good(), "score: cannot open '" + args.out + "'");
  char buf[256];
  for (const auto& t : trials) {
    SpeakerModel m;
    m.speaker_id = t.enroll_speaker;
    m.embedding = enrolled.at(t.enroll_speaker);
    const double s =
        score(m, tests.at(t.test_utterance), method,
              method == ScoreMethod::kNegMahalanobis ? &whitening : nullptr);
    std::snprintf(buf, sizeof buf, "%s %s %.12g\n", t.enroll_speaker.c_str(),
                  t.test_utterance.c_str(), s);
    os << buf;
  }
  check_data(os.good(), "score: short write to '" + args.out + "'");
  std::printf("score: wrote %zu scores\n", trials.size());
  return 0;
}

int run_eval(const EvalArgs& args) {
  const auto trials = read_trials(args.trials);

  std::map<std::pair<std::string, std::string>, double> score_map;
  {
    std::ifstream is(args.scores);
    check_data(is.good(), "eval: cannot open scores '" + args.scores + "'");
    std::string e, t;
    double s;
    while (is >> e >> t >> s) score_map[{e, t}] = s;
  }

  ScoreSet set;
  std::vector<std::string> missing;
  for (const auto& t : trials) {
    const auto it = score_map.find({t.enroll_speaker, t.test_utterance});
    if (it == score_map.end()) {
      missing.push_back(t.enroll_speaker + "/" + t.test_utterance);
      continue;
    }
    set.add(t.target, t.enroll_speaker, t.test_utterance, it->second);
  }
  report_missing(missing, "trial");

  const EerResult e = eer(set);
  const AccResult a = acc(set);
  std::printf("EER %.4f\n", e.eer);
  std::printf("ACC %.4f\n", a.acc);
  std::printf("eer_threshold %.9g\n", e.threshold);
  std::printf("eer_step %.9g\n", e.eer_step);
  std::printf("acc_threshold %.9g\n", a.threshold);

  if (!args.det.empty()) {
    std::ofstream os(args.det, std::ios::trunc);
    check_data(os.good(), "eval: cannot open det file '" + args.det + "'");
    os << "threshold,far,frr\n";
    char buf[128];
    for (const auto& p : det_points(set)) {
      std::snprintf(buf, sizeof buf, "%.9g,%.9g,%.9g\n", p.threshold, p.far,
                    p.frr);
      os << buf;
    }
  }
  return 0;
}

struct GroupError {
  std::string group;
  double max_rel = 0.0;

  void update(double err) { max_rel = std::max(max_rel, err); }
};

int run_gradcheck(const GradcheckArgs& args) {
  Rng rng(args.seed);
  GroupError emb{"loss.embeddings"}, means{"loss.means"},
      logvars{"loss.log_variances"}, enc{"encoder"};

  const double alphas[] = {0.0, 0.01, 0.1, 0.3, 1.0};
  const double lambdas[] = {0.0, 0.1, 1.0};

  for (std::size_t rep = 0; rep < args.cases; ++rep) {
    const std::size_t num_classes = 1 + rng.uniform_index(8);
    const std::size_t dim = 1 + rng.uniform_index(16);
    const std::size_t batch = 1 + rng.uniform_index(6);

    GMParams gm = GMParams::create(num_classes, dim);
    for (std::size_t i = 0; i < gm.means.numel(); ++i)
      gm.means[i] = rng.normal(0.0, 1.5);
    for (std::size_t i = 0; i < gm.log_variances.numel(); ++i)
      gm.log_variances[i] = rng.uniform(-1.5, 1.5);
    Batch b;
    b.embeddings = Tensor({batch, dim});
    for (std::size_t i = 0; i < b.embeddings.numel(); ++i)
      b.embeddings[i] = rng.normal(0.0, 1.5);
    b.labels.resize(batch);
    for (std::size_t i = 0; i < batch; ++i)
      b.labels[i] = rng.uniform_index(num_classes);

    LossConfig cfg;
    cfg.alpha = alphas[rep % 5];
    cfg.lambda = lambdas[rep % 3];

    auto analytic = lgm_loss_backward(b, gm, cfg);
    if (args.inject_fault == "embeddings") analytic.d_embeddings[0] += 1e-2;
    if (args.inject_fault == "means") analytic.d_means[0] += 1e-2;
    if (args.inject_fault == "log_variances")
      analytic.d_log_variances[0] += 1e-2;

    ParamSet probe;
    probe.add("x", b.embeddings);
    probe.add("means", gm.means);
    probe.add("log_vars", gm.log_variances);
    const auto labels = b.labels;
    const auto priors = gm.priors;
    const auto fd = FiniteDiff::gradient(
        [&](const ParamSet& p) {
          GMParams gm2;
          gm2.means = p.value("means");
          gm2.log_variances = p.value("log_vars");
          gm2.priors = priors;
          Batch b2;
          b2.embeddings = p.value("x");
          b2.labels = labels;
          return lgm_loss(b2, gm2, cfg).total;
        },
        probe);

    emb.update(gradient_rel_error(analytic.d_embeddings, fd.grad("x")));
    means.update(gradient_rel_error(analytic.d_means, fd.grad("means")));
    logvars.update(
        gradient_rel_error(analytic.d_log_variances, fd.grad("log_vars")));
  }

  // Tiny-encoder suite: full loss chained through the encoder. Draws are
  // redone whenever a relu pre-activation falls inside the probe radius,
  // where central differences stop being a derivative oracle.
  for (int rep = 0; rep < 3; ++rep) {
    EncoderConfig ecfg;
    ecfg.input_feat_dim = 8;
    ecfg.block_channels = {4};
    ecfg.blocks_per_stage = 2;
    ecfg.embedding_dim = 4;
    ecfg.min_input_frames = 8;
    const Encoder encoder(ecfg);
    ParamSet params;
    Tensor features;
    for (int attempt = 0; attempt < 64; ++attempt) {
      params = encoder.init_params(rng);
      features = Tensor::randn({8, 8}, rng);
      Encoder::Cache probe_cache;
      encoder.encode(params, features, &probe_cache);
      if (Encoder::min_relu_preactivation(probe_cache) > 1e-4) break;
    }

    GMParams gm = GMParams::create(3, 4);
    for (std::size_t i = 0; i < gm.means.numel(); ++i)
      gm.means[i] = rng.normal(0.0, 0.5);
    LossConfig lcfg;
    lcfg.alpha = alphas[rep % 5];
    lcfg.lambda = 0.1;

    const auto objective = [&](const ParamSet& p) {
      Batch b;
      b.embeddings = Tensor({1, 4});
      const Tensor e = encoder.encode(p, features);
      for (std::size_t i = 0; i < 4; ++i) b.embeddings[i] = e[i];
      b.labels = {1};
      return lgm_loss(b, gm, lcfg).total;
    };

    Encoder::Cache cache;
    const Tensor e = encoder.encode(params, features, &cache);
    Batch b;
    b.embeddings = Tensor({1, 4}, std::vector<double>(e.values()));
    b.labels = {1};
    const auto loss_grads = lgm_loss_backward(b, gm, lcfg);
    ParamSet grads = params;
    grads.zero_grad();
    encoder.encode_backward(
        params, cache,
        Tensor({4}, std::vector<double>(loss_grads.d_embeddings.values())),
        grads);
    if (args.inject_fault == "encoder")
      grads.grad(enc_names::proj_w())[0] += 1e-2;

    const auto fd = FiniteDiff::gradient(objective, params);
    for (const auto& entry : params.entries())
      enc.update(gradient_rel_error(grads.grad(entry.name), fd.grad(entry.name)));
  }

  bool ok = true;
  for (const auto& g : {emb, means, logvars, enc}) {
    const bool pass = g.max_rel <= args.tolerance;
    ok = ok && pass;
    std::printf("%s max_rel_err %.3e %s\n", g.group.c_str(), g.max_rel,
                pass ? "ok" : "FAIL");
  }
  std::printf("%s (tolerance %.1e, %zu loss cases)\n", ok ? "PASS" : "FAIL",
              args.tolerance, args.cases);
  return ok ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Large-margin Gaussian-mixture speaker verification pipeline"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Plain-text config file ([section] key = value)");
  app.allow_config_extras(false);

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic speaker corpus");
  synth->add_option("--out", synth_args.out, "Output corpus directory")->required();
  synth->add_option("--seed", synth_args.cfg.seed, "RNG seed");
  synth->add_option("--speakers", synth_args.cfg.num_train_speakers,
                    "Training speakers");
  synth->add_option("--test-speakers", synth_args.cfg.num_test_speakers,
                    "Held-out speakers");
  synth->add_option("--utts", synth_args.cfg.utterances_per_speaker,
                    "Utterances per speaker");
  synth->add_option("--frames", synth_args.cfg.frames_per_utterance,
                    "Frames per utterance");
  synth->add_option("--feat-dim", synth_args.cfg.feat_dim, "Feature dimension");
  synth->add_option("--inter", synth_args.cfg.inter_speaker_spread,
                    "Inter-speaker spread");
  synth->add_option("--intra", synth_args.cfg.intra_speaker_spread,
                    "Intra-speaker spread");
  synth->add_option("--smooth", synth_args.cfg.smooth_window,
                    "Temporal smoothing window (frames)");
  synth->add_option("--frame-rate", synth_args.cfg.frame_rate,
                    "Frames per second metadata");
  synth->add_option("--enroll-utts", synth_args.cfg.enroll_utterances,
                    "Enrollment utterances per test speaker");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train an encoder");
  train_cmd->add_option("--corpus", train_args.corpus_dir, "Corpus directory")
      ->required();
  train_cmd->add_option("--out", train_args.out, "Checkpoint path")->required();
  train_cmd->add_option("--report", train_args.report,
                        "Step log path (default: <out>.report.csv)");
  train_cmd->add_option("--loss", train_args.loss, "lgm|triplet");
  train_cmd->add_option("--alpha", train_args.cfg.alpha, "Margin coefficient");
  train_cmd->add_option("--lambda", train_args.cfg.lambda,
                        "Likelihood regularization weight");
  train_cmd->add_option("--triplet-margin", train_args.cfg.triplet_margin,
                        "Triplet hinge margin");
  train_cmd->add_option("--epochs", train_args.cfg.epochs, "Training epochs");
  train_cmd->add_option("--batch", train_args.cfg.batch_size, "Batch size");
  train_cmd->add_option("--lr", train_args.cfg.optimizer.learning_rate,
                        "Learning rate");
  train_cmd->add_option("--lr-decay", train_args.cfg.lr_decay,
                        "Per-epoch learning-rate decay");
  train_cmd->add_option("--optimizer", train_args.optimizer, "adam|sgd");
  train_cmd->add_option("--momentum", train_args.cfg.optimizer.momentum,
                        "SGD momentum");
  train_cmd->add_option("--seed", train_args.cfg.seed, "RNG seed");
  train_cmd->add_option("--chunk-frames", train_args.cfg.chunk_frames,
                        "Training crop length (frames)");
  train_cmd->add_option("--checkpoint-interval",
                        train_args.cfg.checkpoint_interval,
                        "Epochs between snapshots (0 = final only)");
  train_cmd->add_option("--threads", train_args.cfg.num_threads,
                        "Worker threads");
  train_cmd->add_option("--channels", train_args.channels,
                        "Stage channel widths, comma separated");
  train_cmd->add_option("--blocks-per-stage",
                        train_args.cfg.encoder.blocks_per_stage,
                        "Residual blocks per stage");
  train_cmd->add_option("--embedding-dim", train_args.cfg.encoder.embedding_dim,
                        "Embedding dimension");
  train_cmd->add_option("--min-frames", train_args.cfg.encoder.min_input_frames,
                        "Minimum encoder input length");
  train_cmd->add_option("--feat-dim", train_args.feat_dim,
                        "Feature dimension (default: read from the corpus)");
  train_cmd->add_flag("--no-normalize", train_args.no_normalize,
                      "Disable embedding length normalization");

  EmbedArgs embed_args;
  auto* embed_cmd =
      app.add_subcommand("embed", "Extract utterance embeddings");
  embed_cmd->add_option("--checkpoint", embed_args.checkpoint, "Model checkpoint")
      ->required();
  embed_cmd->add_option("--manifest", embed_args.manifest, "Utterance manifest")
      ->required();
  embed_cmd->add_option("--features-dir", embed_args.features_dir,
                        "Base directory for manifest paths")
      ->required();
  embed_cmd->add_option("--out", embed_args.out, "Output embedding text file");
  embed_cmd->add_option("--binary-dir", embed_args.binary_dir,
                        "Also write binary embeddings here");
  embed_cmd->add_option("--chunk-frames", embed_args.chunk_frames,
                        "Chunk length (default: from checkpoint)");

  EmbedArgs enroll_args;
  auto* enroll_cmd =
      app.add_subcommand("enroll", "Average utterances into speaker models");
  enroll_cmd
      ->add_option("--checkpoint", enroll_args.checkpoint, "Model checkpoint")
      ->required();
  enroll_cmd->add_option("--manifest", enroll_args.manifest, "Enroll manifest")
      ->required();
  enroll_cmd->add_option("--features-dir", enroll_args.features_dir,
                         "Base directory for manifest paths")
      ->required();
  enroll_cmd->add_option("--out", enroll_args.out, "Output speaker embedding file");
  enroll_cmd->add_option("--binary-dir", enroll_args.binary_dir,
                         "Also write binary embeddings here");
  enroll_cmd->add_option("--chunk-frames", enroll_args.chunk_frames,
                         "Chunk length (default: from checkpoint)");

  ScoreArgs score_args;
  auto* score_cmd = app.add_subcommand("score", "Score trials");
  score_cmd->add_option("--enroll", score_args.enroll_file,
                        "Enrolled speaker embeddings")
      ->required();
  score_cmd->add_option("--test", score_args.test_file, "Test embeddings")
      ->required();
  score_cmd->add_option("--trials", score_args.trials, "Trial list")->required();
  score_cmd->add_option("--out", score_args.out, "Output score file")->required();
  score_cmd->add_option("--method", score_args.method,
                        "cosine|neg_mahalanobis");
  score_cmd->add_option("--checkpoint", score_args.checkpoint,
                        "Checkpoint providing GM whitening (neg_mahalanobis)");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Compute ACC and EER");
  eval_cmd->add_option("--trials", eval_args.trials, "Trial list")->required();
  eval_cmd->add_option("--scores", eval_args.scores, "Score file")->required();
  eval_cmd->add_option("--det", eval_args.det, "DET operating-point export");

  GradcheckArgs grad_args;
  auto* grad_cmd =
      app.add_subcommand("gradcheck", "Certify analytic gradients");
  grad_cmd->add_option("--seed", grad_args.seed, "RNG seed");
  grad_cmd->add_option("--cases", grad_args.cases, "Loss-suite case count");
  grad_cmd->add_option("--tolerance", grad_args.tolerance,
                       "Max relative error");
  grad_cmd
      ->add_option("--inject-fault", grad_args.inject_fault,
                   "Test hook: corrupt one gradient "
                   "(embeddings|means|log_variances|encoder)")
      ->group("");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (synth->parsed()) return run_synth(synth_args);
    if (train_cmd->parsed()) return run_train(train_args);
    if (embed_cmd->parsed()) return run_embed(embed_args);
    if (enroll_cmd->parsed()) return run_enroll(enroll_args);
    if (score_cmd->parsed()) return run_score(score_args);
    if (eval_cmd->parsed()) return run_eval(eval_args);
    if (grad_cmd->parsed()) return run_gradcheck(grad_args);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 1;
}
