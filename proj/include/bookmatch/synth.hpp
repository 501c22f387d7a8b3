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
#ifndef BOOKMATCH_SYNTH_HPP_
#define BOOKMATCH_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "bookmatch/corpus.hpp"
#include "bookmatch/embed.hpp"
#include "bookmatch/util.hpp"

namespace bookmatch {

// Text-noise model: a word pass (delete, else replace from a vocabulary)
// followed by a character pass (delete, else substitute from an alphabet).
struct CorruptionConfig {
  double p_char_del = 0.05;
  double p_char_sub = 0.05;
  double p_word_del = 0.15;
  double p_word_rep = 0.10;
  // Substitution alphabet, UTF-8: lowercase a-z, digits, space, and the
  // accented letters common in the Spanish/Catalan catalogue entries.
  std::string alphabet = "abcdefghijklmnopqrstuvwxyz0123456789 "
                         "áéíóú"
                         "àèìòù"
                         "äëïöü"
                         "ñç·";
  std::uint64_t seed = 0;

  void validate() const;  // probabilities in [0,1], alphabet non-empty
};

// Applies the two corruption passes to one normalized text, consuming draws
// from `rng` in a pinned order. `vocabulary` feeds word replacement; when it
// is empty, replacement keeps the original token.
std::string corrupt_text(std::string_view text, const CorruptionConfig& cfg, Rng& rng,
                         const std::vector<std::string>& vocabulary);

// Convenience wrapper holding the vocabulary (typically every catalogue
// token) so callers corrupt many texts against one word pool.
class TextCorruptor {
 public:
  TextCorruptor(CorruptionConfig cfg, std::vector<std::string> vocabulary);
  static std::vector<std::string> catalog_vocabulary(const Catalog& catalog);

  std::string operator()(std::string_view text, Rng& rng) const;
  const CorruptionConfig& config() const { return cfg_; }

 private:
  CorruptionConfig cfg_;
  std::vector<std::string> vocabulary_;
};

// One reranker training example: a corrupted query, its K candidate
// positions with first-stage scores, and the gold index (k = "none").
struct SynthSample {
  std::string corrupted_text;  // normalized
  std::string source_id;
  std::vector<std::size_t> candidates;
  std::vector<double> scores;
  std::size_t label = 0;  // 0..k-1, or k for "none"
};

// Samples JSONL line schema (self-contained so training needs no catalogue):
// corrupted_text, source_id, candidates, candidate_texts, scores, label, k.
void write_samples(const std::vector<SynthSample>& samples, const Catalog& catalog,
                   bool normalize, const std::string& path);
struct LoadedSamples {
  std::vector<SynthSample> samples;
  std::vector<std::vector<std::string>> candidate_texts;  // parallel to samples
  std::size_t k = 0;
};
LoadedSamples read_samples(const std::string& path);

// The 50/50 protocol: draw an entry, corrupt its composed text, rank the
// whole catalogue with the frozen embedder, then either force the source
// into the top k (label = its index) or force it out (label = k).
std::vector<SynthSample> gen_rerank_dataset(const Catalog& catalog,
                                            const EmbedConfig& embed_cfg, std::size_t k,
                                            std::size_t n_samples, const CorruptionConfig& cfg,
                                            int threads = 1);

// Seeded end-to-end benchmark: a synthetic catalogue of n_targets unique
// author+title entries plus n_queries corrupted detections pointing at a
// without-replacement sample of them. nil_fraction of the detections instead
// point at entries withheld from the catalogue (ground truth "not in list").
struct BenchmarkConfig {
  std::size_t n_targets = 1000;
  std::size_t n_queries = 100;
  double nil_fraction = 0.0;
  CorruptionConfig corruption;
  std::uint64_t seed = 0;
  std::size_t detections_per_image = 30;
};

struct Benchmark {
  Catalog catalog;
  std::vector<Detection> detections;
};

Benchmark gen_benchmark(const BenchmarkConfig& cfg);

}  // namespace bookmatch

#endif  // BOOKMATCH_SYNTH_HPP_
