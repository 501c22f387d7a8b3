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
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "bookmatch/corpus.hpp"
#include "bookmatch/embed.hpp"
#include "bookmatch/lap.hpp"
#include "bookmatch/pipeline.hpp"
#include "bookmatch/rerank.hpp"
#include "bookmatch/simtopk.hpp"
#include "bookmatch/strdist.hpp"
#include "bookmatch/synth.hpp"
#include "bookmatch/text.hpp"
#include "bookmatch/util.hpp"

namespace py = pybind11;

namespace {

using namespace bookmatch;

std::vector<float> py_embed_text(const std::string& text, std::uint32_t dim,
                                 std::uint64_t seed) {
  EmbedConfig cfg;
  cfg.dim = dim;
  cfg.seed = seed;
  return embed_text(text, cfg);
}

std::string py_corrupt_text(const std::string& text, std::uint64_t seed,
                            double p_char_del, double p_char_sub, double p_word_del,
                            double p_word_rep,
                            const std::vector<std::string>& vocabulary) {
  CorruptionConfig cfg;
  cfg.p_char_del = p_char_del;
  cfg.p_char_sub = p_char_sub;
  cfg.p_word_del = p_word_del;
  cfg.p_word_rep = p_word_rep;
  cfg.seed = seed;
  cfg.validate();
  Rng rng(seed);
  return corrupt_text(text, cfg, rng, vocabulary);
}

std::pair<std::vector<std::size_t>, double> py_solve_lap_max(
    const std::vector<std::vector<float>>& rows) {
  SimilarityMatrix s;
  s.rows = rows.size();
  s.cols = rows.empty() ? 0 : rows[0].size();
  s.data.reserve(s.rows * s.cols);
  for (const auto& row : rows) {
    if (row.size() != s.cols) {
      throw UsageError("similarity matrix rows must have equal length");
    }
    s.data.insert(s.data.end(), row.begin(), row.end());
  }
  const Assignment a = solve_lap_max(s);
  return {a.row_to_col, a.total};
}

std::vector<std::vector<std::pair<std::size_t, float>>> py_top_k(
    const std::vector<std::string>& queries, const std::vector<std::string>& targets,
    std::size_t k, std::uint32_t dim, std::uint64_t seed, int threads) {
  EmbedConfig cfg;
  cfg.dim = dim;
  cfg.seed = seed;
  std::vector<std::string> normalized_queries;
  normalized_queries.reserve(queries.size());
  for (const auto& q : queries) normalized_queries.push_back(normalize_text(q));
  std::vector<std::string> normalized_targets;
  normalized_targets.reserve(targets.size());
  for (const auto& t : targets) normalized_targets.push_back(normalize_text(t));
  const EmbeddingMatrix q = embed_batch(normalized_queries, cfg, threads);
  const EmbeddingMatrix t = embed_batch(normalized_targets, cfg, threads);
  MatrixTargetSource source(t, kDefaultBlockSize);
  const auto lists = top_k_candidates(q, source, k, threads);
  std::vector<std::vector<std::pair<std::size_t, float>>> out(lists.size());
  for (std::size_t i = 0; i < lists.size(); ++i) {
    out[i].reserve(lists[i].size());
    for (const auto& c : lists[i]) out[i].emplace_back(c.position, c.score);
  }
  return out;
}

std::size_t py_match_files(const std::string& detections_path,
                           const std::string& catalog_path, const std::string& out_path,
                           const std::string& stage1, const std::string& stage2,
                           std::size_t topk, std::uint32_t dim, std::uint64_t seed,
                           const std::string& model_path,
                           const std::string& target_emb_path,
                           std::optional<double> tau, int threads) {
  PipelineConfig cfg;
  cfg.stage1 = stage1_from_string(stage1);
  cfg.stage2 = stage2_from_string(stage2);
  cfg.topk = topk;
  cfg.embed.dim = dim;
  cfg.embed.seed = seed;
  cfg.tau = tau;
  cfg.threads = threads;
  cfg.target_emb_path = target_emb_path;
  if (!model_path.empty()) cfg.model = read_model(model_path);
  cfg.validate();  // reject bad flag combinations before loading files
  const Catalog catalog = load_catalog(catalog_path);
  const auto detections = load_detections(detections_path);
  const auto records = run_match(detections, catalog, cfg);
  write_matches(records, out_path);
  return records.size();
}

py::dict py_eval_files(const std::string& matches_path, const std::string& detections_path,
                       const std::string& mode) {
  const auto matches = read_matches(matches_path);
  const auto detections = load_detections(detections_path);
  const EvalReport report =
      evaluate_accuracy(matches, detections, eval_mode_from_string(mode));
  py::dict d;
  d["accuracy"] = report.accuracy;
  d["n_total"] = report.n_total;
  d["n_correct"] = report.n_correct;
  d["stage"] = report.stage;
  d["mode"] = report.mode;
  return d;
}

void py_gen_benchmark_files(const std::string& catalog_out,
                            const std::string& detections_out, std::size_t n_targets,
                            std::size_t n_queries, double nil_fraction,
                            std::uint64_t seed, double p_char_del, double p_char_sub,
                            double p_word_del, double p_word_rep) {
  BenchmarkConfig cfg;
  cfg.n_targets = n_targets;
  cfg.n_queries = n_queries;
  cfg.nil_fraction = nil_fraction;
  cfg.seed = seed;
  cfg.corruption.p_char_del = p_char_del;
  cfg.corruption.p_char_sub = p_char_sub;
  cfg.corruption.p_word_del = p_word_del;
  cfg.corruption.p_word_rep = p_word_rep;
  const Benchmark bench = gen_benchmark(cfg);
  write_catalog(bench.catalog, catalog_out);
  write_detections(bench.detections, detections_out);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Noisy book-spine text to catalogue matching";
#ifdef BOOKMATCH_VERSION
  m.attr("__version__") = BOOKMATCH_VERSION;
#endif

  py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
  py::register_exception<ResourceLimitError>(m, "ResourceLimitError", PyExc_RuntimeError);

  m.def("normalize_text", &normalize_text, py::arg("text"),
        "NFKC + lowercase + letters/digits-only canonical form");
  m.def(
      "levenshtein",
      [](const std::string& a, const std::string& b) {
        return levenshtein(std::string_view(a), std::string_view(b));
      },
      py::arg("a"), py::arg("b"), "Edit distance over Unicode scalar values");
  m.def(
      "normalized_similarity",
      [](const std::string& a, const std::string& b) {
        return normalized_similarity(std::string_view(a), std::string_view(b));
      },
      py::arg("a"), py::arg("b"), "1 - distance / max(len)");
  m.def("embed_text", &py_embed_text, py::arg("text"), py::arg("dim") = 1024,
        py::arg("seed") = 0, "Hashed character n-gram embedding (unit norm)");
  m.def("corrupt_text", &py_corrupt_text, py::arg("text"), py::arg("seed") = 0,
        py::arg("p_char_del") = 0.05, py::arg("p_char_sub") = 0.05,
        py::arg("p_word_del") = 0.15, py::arg("p_word_rep") = 0.10,
        py::arg("vocabulary") = std::vector<std::string>{},
        "Word-pass then char-pass synthetic corruption");
  m.def("solve_lap_max", &py_solve_lap_max, py::arg("similarity"),
        "Maximum-weight assignment; returns (row_to_col, total)");
  m.def("top_k", &py_top_k, py::arg("queries"), py::arg("targets"), py::arg("k") = 10,
        py::arg("dim") = 1024, py::arg("seed") = 0, py::arg("threads") = 1,
        "Exact top-k candidates per query; (position, score) pairs");
  m.def("match_files", &py_match_files, py::arg("detections"), py::arg("catalog"),
        py::arg("out"), py::arg("stage1") = "embed", py::arg("stage2") = "none",
        py::arg("topk") = 10, py::arg("dim") = 1024, py::arg("seed") = 0,
        py::arg("model") = "", py::arg("target_emb") = "",
        py::arg("tau") = std::nullopt, py::arg("threads") = 1,
        "Run the two-stage matcher over files; writes matches JSONL");
  m.def("eval_files", &py_eval_files, py::arg("matches"), py::arg("detections"),
        py::arg("mode") = "matching-only", "Score a matches file against ground truth");
  m.def("gen_benchmark_files", &py_gen_benchmark_files, py::arg("catalog_out"),
        py::arg("detections_out"), py::arg("n_targets") = 1000,
        py::arg("n_queries") = 100, py::arg("nil_fraction") = 0.0, py::arg("seed") = 0,
        py::arg("p_char_del") = 0.05, py::arg("p_char_sub") = 0.05,
        py::arg("p_word_del") = 0.15, py::arg("p_word_rep") = 0.10,
        "Write a seeded synthetic benchmark to files");
}
