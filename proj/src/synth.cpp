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
#include "bookmatch/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string_view>
#include <unordered_set>
#include <utility>

#include "json.hpp"

#include "bookmatch/simtopk.hpp"
#include "bookmatch/text.hpp"

namespace bookmatch {

namespace {

using nlohmann::json;

void check_probability(double p, const char* name) {
  if (!(p >= 0.0 && p <= 1.0)) {
    throw UsageError(std::string(name) + " must be in [0, 1]");
  }
}

}  // namespace

void CorruptionConfig::validate() const {
  check_probability(p_char_del, "p_char_del");
  check_probability(p_char_sub, "p_char_sub");
  check_probability(p_word_del, "p_word_del");
  check_probability(p_word_rep, "p_word_rep");
  if (alphabet.empty()) throw UsageError("alphabet must be non-empty");
}

std::string corrupt_text(std::string_view text, const CorruptionConfig& cfg, Rng& rng,
                         const std::vector<std::string>& vocabulary) {
  // Word pass. Draw order per token is pinned: delete?, then (if kept)
  // replace?, then (if replacing) the vocabulary index.
  std::vector<std::string> tokens = split_tokens(text);
  std::string kept;
  bool first = true;
  for (auto& token : tokens) {
    if (rng.bernoulli(cfg.p_word_del)) continue;
    if (rng.bernoulli(cfg.p_word_rep) && !vocabulary.empty()) {
      token = vocabulary[rng.next_index(vocabulary.size())];
    }
    if (!first) kept.push_back(' ');
    kept += token;
    first = false;
  }

  // Character pass over Unicode scalars: delete?, then (if kept) substitute?.
  const std::u32string chars = utf8_to_utf32(kept);
  const std::u32string alphabet = utf8_to_utf32(cfg.alphabet);
  std::u32string out;
  out.reserve(chars.size());
  for (char32_t cp : chars) {
    if (rng.bernoulli(cfg.p_char_del)) continue;
    if (rng.bernoulli(cfg.p_char_sub)) {
      cp = alphabet[rng.next_index(alphabet.size())];
    }
    out.push_back(cp);
  }
  return utf32_to_utf8(out);
}

TextCorruptor::TextCorruptor(CorruptionConfig cfg, std::vector<std::string> vocabulary)
    : cfg_(std::move(cfg)), vocabulary_(std::move(vocabulary)) {
  cfg_.validate();
}

std::vector<std::string> TextCorruptor::catalog_vocabulary(const Catalog& catalog) {
  std::unordered_set<std::string> seen;
  for (const auto& entry : catalog.entries()) {
    for (auto& token : split_tokens(compose_target_text(entry))) {
      seen.insert(std::move(token));
    }
  }
  std::vector<std::string> vocabulary(seen.begin(), seen.end());
  std::sort(vocabulary.begin(), vocabulary.end());
  return vocabulary;
}

std::string TextCorruptor::operator()(std::string_view text, Rng& rng) const {
  return corrupt_text(text, cfg_, rng, vocabulary_);
}

void write_samples(const std::vector<SynthSample>& samples, const Catalog& catalog,
                   bool normalize, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  for (const auto& s : samples) {
    json line;
    line["corrupted_text"] = s.corrupted_text;
    line["source_id"] = s.source_id;
    line["candidates"] = s.candidates;
    json texts = json::array();
    for (std::size_t pos : s.candidates) {
      texts.push_back(compose_target_text(catalog.at(pos), normalize));
    }
    line["candidate_texts"] = std::move(texts);
    line["scores"] = s.scores;
    line["label"] = s.label;
    line["k"] = s.candidates.size();
    out << line.dump() << '\n';
  }
  out.flush();
  if (!out) throw DataError("write failed for " + path);
}

LoadedSamples read_samples(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  LoadedSamples loaded;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(where + ": invalid JSON: " + e.what());
    }
    try {
      SynthSample s;
      s.corrupted_text = j.at("corrupted_text").get<std::string>();
      s.source_id = j.at("source_id").get<std::string>();
      s.candidates = j.at("candidates").get<std::vector<std::size_t>>();
      s.scores = j.at("scores").get<std::vector<double>>();
      s.label = j.at("label").get<std::size_t>();
      const auto k = j.at("k").get<std::size_t>();
      auto texts = j.at("candidate_texts").get<std::vector<std::string>>();
      if (s.candidates.size() != k || s.scores.size() != k || texts.size() != k) {
        throw DataError(where + ": candidates, candidate_texts and scores must all have length k");
      }
      if (s.label > k) {
        throw DataError(where + ": label " + std::to_string(s.label) + " out of range 0.." +
                        std::to_string(k));
      }
      if (loaded.samples.empty()) {
        loaded.k = k;
      } else if (k != loaded.k) {
        throw DataError(where + ": k changed from " + std::to_string(loaded.k) + " to " +
                        std::to_string(k));
      }
      loaded.samples.push_back(std::move(s));
      loaded.candidate_texts.push_back(std::move(texts));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return loaded;
}

std::vector<SynthSample> gen_rerank_dataset(const Catalog& catalog,
                                            const EmbedConfig& embed_cfg, std::size_t k,
                                            std::size_t n_samples, const CorruptionConfig& cfg,
                                            int threads) {
  if (k == 0) throw UsageError("k must be >= 1");
  if (catalog.size() <= k) {
    throw UsageError("catalogue size " + std::to_string(catalog.size()) +
                     " must exceed k = " + std::to_string(k));
  }
  cfg.validate();
  embed_cfg.validate();

  std::vector<std::string> target_texts;
  target_texts.reserve(catalog.size());
  for (const auto& entry : catalog.entries()) {
    target_texts.push_back(compose_target_text(entry));
  }
  const EmbeddingMatrix targets = embed_batch(target_texts, embed_cfg, threads);
  const TextCorruptor corruptor(cfg, TextCorruptor::catalog_vocabulary(catalog));

  // Per-sample substreams: entry draw, corruption draws, then the coin.
  std::vector<std::size_t> source(n_samples);
  std::vector<std::string> queries(n_samples);
  std::vector<char> include(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      Rng rng = Rng::substream(cfg.seed, i);
      source[i] = rng.next_index(catalog.size());
      queries[i] = normalize_text(corruptor(target_texts[source[i]], rng));
      include[i] = rng.bernoulli(0.5) ? 1 : 0;
    }
  });

  const EmbeddingMatrix query_emb = embed_batch(queries, embed_cfg, threads);
  MatrixTargetSource source_targets(targets, kDefaultBlockSize);
  const auto ranked = top_k_candidates(query_emb, source_targets, k + 1, threads);

  std::vector<SynthSample> samples(n_samples);
  parallel_for(n_samples, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const std::size_t src = source[i];
      std::vector<Candidate> list(ranked[i].begin(), ranked[i].begin() + k);
      auto found = std::find_if(list.begin(), list.end(),
                                [src](const Candidate& c) { return c.position == src; });
      std::size_t label;
      if (include[i]) {
        if (found == list.end()) {
          const float score = static_cast<float>(
              dot_f32(query_emb.row(i), targets.row(src), query_emb.dim()));
          list.back() = Candidate{src, score};
          std::sort(list.begin(), list.end(), candidate_better);
        }
        label = static_cast<std::size_t>(
            std::find_if(list.begin(), list.end(),
                         [src](const Candidate& c) { return c.position == src; }) -
            list.begin());
      } else {
        if (found != list.end()) {
          list.erase(found);
          list.push_back(ranked[i][k]);
        }
        label = k;
      }
      SynthSample s;
      s.corrupted_text = queries[i];
      s.source_id = catalog.at(src).id;
      s.candidates.reserve(k);
      s.scores.reserve(k);
      for (const auto& c : list) {
        s.candidates.push_back(c.position);
        s.scores.push_back(static_cast<double>(c.score));
      }
      s.label = label;
      samples[i] = std::move(s);
    }
  });
  return samples;
}

namespace {

// Pronounceable seeded words keep the synthetic catalogue plausibly book-like
// and give a huge pool of unique titles.
std::string gen_word(Rng& rng) {
  static constexpr std::string_view kConsonants = "bcdfghklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  const std::size_t syllables = 2 + rng.next_index(3);
  std::string word;
  for (std::size_t s = 0; s < syllables; ++s) {
    word.push_back(kConsonants[rng.next_index(kConsonants.size())]);
    word.push_back(kVowels[rng.next_index(kVowels.size())]);
  }
  return word;
}

std::string capitalize(std::string word) {
  if (!word.empty()) word[0] = static_cast<char>(word[0] - 'a' + 'A');
  return word;
}

CatalogEntry gen_entry(Rng& rng, std::size_t serial) {
  CatalogEntry e;
  char id[16];
  std::snprintf(id, sizeof(id), "b%06zu", serial);
  e.id = id;
  e.author = capitalize(gen_word(rng)) + " " + capitalize(gen_word(rng));
  const std::size_t title_words = 1 + rng.next_index(4);
  for (std::size_t w = 0; w < title_words; ++w) {
    std::string word = gen_word(rng);
    if (w == 0) word = capitalize(std::move(word));
    if (w > 0) e.title.push_back(' ');
    e.title += word;
  }
  e.isbn.reserve(13);
  for (int d = 0; d < 13; ++d) {
    e.isbn.push_back(static_cast<char>('0' + rng.next_index(10)));
  }
  return e;
}

}  // namespace

Benchmark gen_benchmark(const BenchmarkConfig& cfg) {
  if (cfg.n_targets == 0) throw UsageError("n_targets must be >= 1");
  if (cfg.n_queries > cfg.n_targets) {
    throw UsageError("n_queries " + std::to_string(cfg.n_queries) +
                     " must not exceed n_targets " + std::to_string(cfg.n_targets));
  }
  if (!(cfg.nil_fraction >= 0.0 && cfg.nil_fraction <= 1.0)) {
    throw UsageError("nil_fraction must be in [0, 1]");
  }
  if (cfg.detections_per_image == 0) {
    throw UsageError("detections_per_image must be >= 1");
  }
  cfg.corruption.validate();

  Rng rng(cfg.seed);
  const std::size_t n_nil =
      static_cast<std::size_t>(cfg.nil_fraction * static_cast<double>(cfg.n_queries) + 0.5);
  const std::size_t n_in_list = cfg.n_queries - n_nil;
  const std::size_t n_entries = cfg.n_targets + n_nil;

  // Unique entries keyed by normalized composed text; hidden entries (the
  // nil-detection sources) are generated after the catalogue proper.
  std::vector<CatalogEntry> entries;
  entries.reserve(n_entries);
  std::unordered_set<std::string> seen;
  seen.reserve(n_entries * 2);
  std::size_t attempts = 0;
  while (entries.size() < n_entries) {
    if (++attempts > 100 * n_entries + 1000) {
      throw ResourceLimitError("word generator failed to produce enough unique entries");
    }
    CatalogEntry e = gen_entry(rng, entries.size());
    if (!seen.insert(compose_target_text(e)).second) continue;
    entries.push_back(std::move(e));
  }

  // Without-replacement sample of the in-list query positions.
  std::vector<std::size_t> positions(cfg.n_targets);
  for (std::size_t i = 0; i < cfg.n_targets; ++i) positions[i] = i;
  for (std::size_t i = 0; i < n_in_list; ++i) {
    std::swap(positions[i], positions[i + rng.next_index(cfg.n_targets - i)]);
  }
  std::vector<std::pair<std::size_t, bool>> picks;  // (entry index, in list)
  picks.reserve(cfg.n_queries);
  for (std::size_t i = 0; i < n_in_list; ++i) picks.emplace_back(positions[i], true);
  for (std::size_t i = 0; i < n_nil; ++i) picks.emplace_back(cfg.n_targets + i, false);
  rng.shuffle(picks);

  Benchmark bench;
  std::vector<CatalogEntry> catalog_entries(entries.begin(),
                                            entries.begin() + cfg.n_targets);
  bench.catalog = Catalog::from_entries(std::move(catalog_entries));

  const TextCorruptor corruptor(cfg.corruption,
                                TextCorruptor::catalog_vocabulary(bench.catalog));
  bench.detections.reserve(cfg.n_queries);
  for (std::size_t i = 0; i < picks.size(); ++i) {
    const auto& [pos, in_list] = picks[i];
    Rng det_rng = Rng::substream(cfg.seed, i);
    Detection d;
    char buf[24];
    std::snprintf(buf, sizeof(buf), "img%04zu", i / cfg.detections_per_image);
    d.image_id = buf;
    std::snprintf(buf, sizeof(buf), "s%03zu", i % cfg.detections_per_image);
    d.segment_id = buf;
    d.ocr_text = corruptor(compose_target_text(entries[pos]), det_rng);
    d.gt_ids = in_list ? std::vector<std::string>{entries[pos].id}
                       : std::vector<std::string>{};
    d.gt_label = GtLabel::book;
    bench.detections.push_back(std::move(d));
  }
  return bench;
}

}  // namespace bookmatch
