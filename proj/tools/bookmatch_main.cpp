//
// Copyright 2026 The bookmatch Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "bookmatch/corpus.hpp"
#include "bookmatch/embed.hpp"
#include "bookmatch/pipeline.hpp"
#include "bookmatch/rerank.hpp"
#include "bookmatch/synth.hpp"
#include "bookmatch/text.hpp"
#include "bookmatch/util.hpp"

namespace {

using namespace bookmatch;

struct CommonEmbedFlags {
  std::uint32_t dim = 1024;
  std::uint64_t seed = 0;

  EmbedConfig config() const {
    EmbedConfig cfg;
    cfg.dim = dim;
    cfg.seed = seed;
    return cfg;
  }

  void attach(CLI::App& cmd) {
    cmd.add_option("--dim", dim, "Embedding dimension")->capture_default_str();
    cmd.add_option("--seed", seed, "Seed for the hashing basis / RNG")
        ->capture_default_str();
  }
};

struct CorruptionFlags {
  CorruptionConfig cfg;

  void attach(CLI::App& cmd) {
    cmd.add_option("--p-char-del", cfg.p_char_del, "Character deletion probability")
        ->capture_default_str();
    cmd.add_option("--p-char-sub", cfg.p_char_sub, "Character substitution probability")
        ->capture_default_str();
    cmd.add_option("--p-word-del", cfg.p_word_del, "Word deletion probability")
        ->capture_default_str();
    cmd.add_option("--p-word-rep", cfg.p_word_rep, "Word replacement probability")
        ->capture_default_str();
    cmd.add_option("--alphabet", cfg.alphabet, "Substitution alphabet (UTF-8)");
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Noisy book-spine text to catalogue matching"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  int threads = default_threads();
  app.add_option("--threads", threads, "Worker threads (outputs do not depend on this)")
      ->capture_default_str();

  // ---- embed ----
  auto* embed_cmd = app.add_subcommand("embed", "Embed a catalogue into an EMB1 file");
  std::string embed_catalog, embed_out;
  CommonEmbedFlags embed_flags;
  bool embed_raw = false;
  embed_cmd->add_option("--catalog", embed_catalog, "Catalogue CSV")->required();
  embed_cmd->add_option("--out", embed_out, "Output EMB1 path")->required();
  embed_flags.attach(*embed_cmd);
  embed_cmd->add_flag("--raw", embed_raw, "Skip text normalization");

  // ---- match ----
  auto* match_cmd = app.add_subcommand("match", "Match detections against a catalogue");
  std::string match_detections, match_catalog, match_target_emb, match_out = "-";
  std::string match_stage1 = "embed", match_stage2 = "none";
  std::string match_model, match_scores;
  std::size_t match_topk = 10;
  std::size_t match_dense_limit = kDefaultDenseLimit;
  std::size_t match_block = kDefaultBlockSize;
  std::optional<double> match_tau;
  CommonEmbedFlags match_flags;
  bool match_raw = false;
  match_cmd->add_option("--detections", match_detections, "Detections JSONL")->required();
  match_cmd->add_option("--catalog", match_catalog, "Catalogue CSV")->required();
  match_cmd->add_option("--target-emb", match_target_emb, "Precomputed target EMB1 file");
  match_cmd->add_option("--stage1", match_stage1, "First stage: fuzzy or embed")
      ->capture_default_str();
  match_cmd->add_option("--stage2", match_stage2, "Second stage: none, hungarian or rerank")
      ->capture_default_str();
  match_cmd->add_option("--topk", match_topk, "Candidates per detection for rerank")
      ->capture_default_str();
  match_cmd->add_option("--model", match_model, "Reranker model JSON");
  match_cmd->add_option("--scores", match_scores, "External rerank scores JSONL");
  match_cmd->add_option("--tau", match_tau, "Reject threshold for none/hungarian");
  match_cmd->add_option("--dense-limit", match_dense_limit,
                        "Maximum dense similarity entries")
      ->capture_default_str();
  match_cmd->add_option("--block-size", match_block, "Target streaming block rows")
      ->capture_default_str();
  match_cmd->add_option("--out", match_out, "Matches JSONL path ('-' = stdout)")
      ->capture_default_str();
  match_flags.attach(*match_cmd);
  match_cmd->add_flag("--raw", match_raw, "Skip text normalization");

  // ---- eval ----
  auto* eval_cmd = app.add_subcommand("eval", "Score matches against ground truth");
  std::string eval_matches, eval_detections, eval_report;
  std::string eval_mode = "matching-only";
  eval_cmd->add_option("--matches", eval_matches, "Matches JSONL")->required();
  eval_cmd->add_option("--detections", eval_detections, "Detections JSONL with gt")
      ->required();
  eval_cmd->add_option("--mode", eval_mode,
                       "matching-only or detection-and-matching")
      ->capture_default_str();
  eval_cmd->add_option("--report", eval_report, "Report JSON path (optional)");

  // ---- gen-benchmark ----
  auto* gen_cmd = app.add_subcommand("gen-benchmark",
                                     "Generate a seeded synthetic benchmark");
  BenchmarkConfig bench_cfg;
  CorruptionFlags gen_corruption;
  std::string gen_catalog_out, gen_detections_out;
  gen_cmd->add_option("--n-targets", bench_cfg.n_targets, "Catalogue size")
      ->capture_default_str();
  gen_cmd->add_option("--n-queries", bench_cfg.n_queries, "Detection count")
      ->capture_default_str();
  gen_cmd->add_option("--nil-fraction", bench_cfg.nil_fraction,
                      "Fraction of detections whose book is withheld from the catalogue")
      ->capture_default_str();
  gen_cmd->add_option("--seed", bench_cfg.seed, "Benchmark seed")->capture_default_str();
  gen_cmd->add_option("--per-image", bench_cfg.detections_per_image,
                      "Detections grouped per image id")
      ->capture_default_str();
  gen_corruption.attach(*gen_cmd);
  gen_cmd->add_option("--catalog-out", gen_catalog_out, "Catalogue CSV path")->required();
  gen_cmd->add_option("--detections-out", gen_detections_out, "Detections JSONL path")
      ->required();

  // ---- corrupt ----
  auto* corrupt_cmd = app.add_subcommand("corrupt",
                                         "Corrupt the ocr_text of a detections file");
  std::string corrupt_in, corrupt_out, corrupt_catalog;
  std::uint64_t corrupt_seed = 0;
  CorruptionFlags corrupt_flags;
  corrupt_cmd->add_option("--in", corrupt_in, "Input detections JSONL")->required();
  corrupt_cmd->add_option("--out", corrupt_out, "Output detections JSONL")->required();
  corrupt_cmd->add_option("--catalog", corrupt_catalog,
                          "Catalogue CSV feeding the replacement vocabulary");
  corrupt_cmd->add_option("--seed", corrupt_seed, "Corruption seed")->capture_default_str();
  corrupt_flags.attach(*corrupt_cmd);

  // ---- gen-rerank-data ----
  auto* rrdata_cmd = app.add_subcommand("gen-rerank-data",
                                        "Generate 50/50 reranker training samples");
  std::string rrdata_catalog, rrdata_out;
  std::size_t rrdata_k = 10, rrdata_n = 10000;
  CommonEmbedFlags rrdata_embed;
  CorruptionFlags rrdata_corruption;
  std::uint64_t rrdata_seed = 0;
  rrdata_cmd->add_option("--catalog", rrdata_catalog, "Catalogue CSV")->required();
  rrdata_cmd->add_option("--out", rrdata_out, "Samples JSONL path")->required();
  rrdata_cmd->add_option("--topk", rrdata_k, "Candidates per sample")
      ->capture_default_str();
  rrdata_cmd->add_option("--n-samples", rrdata_n, "Sample count")->capture_default_str();
  rrdata_cmd->add_option("--data-seed", rrdata_seed, "Sampling/corruption seed")
      ->capture_default_str();
  rrdata_embed.attach(*rrdata_cmd);
  rrdata_corruption.attach(*rrdata_cmd);

  // ---- train ----
  auto* train_cmd = app.add_subcommand("train", "Train the reranker on samples");
  std::string train_samples, train_out;
  TrainConfig train_cfg;
  train_cmd->add_option("--samples", train_samples, "Samples JSONL")->required();
  train_cmd->add_option("--out", train_out, "Model JSON path")->required();
  train_cmd->add_option("--epochs", train_cfg.epochs, "Training epochs")
      ->capture_default_str();
  train_cmd->add_option("--lr", train_cfg.learning_rate, "Learning rate")
      ->capture_default_str();
  train_cmd->add_option("--batch", train_cfg.batch_size, "Mini-batch size")
      ->capture_default_str();
  train_cmd->add_option("--seed", train_cfg.seed, "Shuffle seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    // CLI11 prints its own message through exit(); route ours to the
    // machine-greppable single-line form instead.
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  if (*embed_cmd) {
    const Catalog catalog = load_catalog(embed_catalog);
    std::vector<std::string> texts;
    texts.reserve(catalog.size());
    for (const auto& entry : catalog.entries()) {
      texts.push_back(compose_target_text(entry, !embed_raw));
    }
    const EmbeddingMatrix m = embed_batch(texts, embed_flags.config(), threads);
    write_embeddings(m, embed_out);
    std::printf("embedded %zu entries at dim %u -> %s\n", m.rows(),
                static_cast<unsigned>(embed_flags.dim), embed_out.c_str());
    return 0;
  }

  if (*match_cmd) {
    PipelineConfig cfg;
    cfg.stage1 = stage1_from_string(match_stage1);
    cfg.stage2 = stage2_from_string(match_stage2);
    cfg.topk = match_topk;
    cfg.embed = match_flags.config();
    cfg.dense_limit = match_dense_limit;
    cfg.tau = match_tau;
    cfg.normalize = !match_raw;
    cfg.block_size = match_block;
    cfg.threads = threads;
    cfg.target_emb_path = match_target_emb;
    if (!match_model.empty()) cfg.model = read_model(match_model);
    cfg.scores_path = match_scores;
    cfg.validate();  // reject bad flag combinations before loading files

    const Catalog catalog = load_catalog(match_catalog);
    const std::vector<Detection> detections = load_detections(match_detections);
    const std::vector<MatchRecord> records = run_match(detections, catalog, cfg);
    if (match_out == "-") {
      write_matches(records, std::cout);
    } else {
      write_matches(records, match_out);
    }
    return 0;
  }

  if (*eval_cmd) {
    const std::vector<MatchRecord> matches = read_matches(eval_matches);
    const std::vector<Detection> detections = load_detections(eval_detections);
    const EvalReport report =
        evaluate_accuracy(matches, detections, eval_mode_from_string(eval_mode));
    if (!eval_report.empty()) write_report(report, eval_report);
    std::printf("mode=%s stage=%s accuracy=%.6f correct=%zu total=%zu\n",
                report.mode.c_str(), report.stage.c_str(), report.accuracy,
                report.n_correct, report.n_total);
    return 0;
  }

  if (*gen_cmd) {
    bench_cfg.corruption = gen_corruption.cfg;
    const Benchmark bench = gen_benchmark(bench_cfg);
    write_catalog(bench.catalog, gen_catalog_out);
    write_detections(bench.detections, gen_detections_out);
    std::printf("generated %zu catalogue entries and %zu detections\n",
                bench.catalog.size(), bench.detections.size());
    return 0;
  }

  if (*corrupt_cmd) {
    std::vector<Detection> detections = load_detections(corrupt_in);
    std::vector<std::string> vocabulary;
    if (!corrupt_catalog.empty()) {
      vocabulary = TextCorruptor::catalog_vocabulary(load_catalog(corrupt_catalog));
    }
    CorruptionConfig cfg = corrupt_flags.cfg;
    cfg.seed = corrupt_seed;
    const TextCorruptor corruptor(cfg, std::move(vocabulary));
    for (std::size_t i = 0; i < detections.size(); ++i) {
      Rng rng = Rng::substream(cfg.seed, i);
      detections[i].ocr_text = corruptor(normalize_text(detections[i].ocr_text), rng);
    }
    write_detections(detections, corrupt_out);
    std::printf("corrupted %zu detections\n", detections.size());
    return 0;
  }

  if (*rrdata_cmd) {
    const Catalog catalog = load_catalog(rrdata_catalog);
    CorruptionConfig cfg = rrdata_corruption.cfg;
    cfg.seed = rrdata_seed;
    const auto samples = gen_rerank_dataset(catalog, rrdata_embed.config(), rrdata_k,
                                            rrdata_n, cfg, threads);
    write_samples(samples, catalog, true, rrdata_out);
    std::size_t none_labels = 0;
    for (const auto& s : samples) none_labels += s.label == rrdata_k ? 1 : 0;
    std::printf("wrote %zu samples (%zu labeled none)\n", samples.size(), none_labels);
    return 0;
  }

  if (*train_cmd) {
    const LoadedSamples loaded = read_samples(train_samples);
    if (loaded.samples.empty()) {
      throw UsageError("no samples in " + train_samples);
    }
    const RerankModel model =
        train_reranker(loaded.samples, loaded.candidate_texts, loaded.k, train_cfg);
    write_model(model, train_out);
    std::printf("trained %zu epochs, final loss %.6f, train accuracy %.4f -> %s\n",
                model.epochs,
                model.loss_curve.empty() ? 0.0 : model.loss_curve.back(),
                model.final_train_accuracy, train_out.c_str());
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const DataError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const ResourceLimitError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
