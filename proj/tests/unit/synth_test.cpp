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

#include "bookmatch/synth.hpp"

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "bookmatch/text.hpp"
#include "bookmatch/util.hpp"
#include "common/temp.hpp"
#include "doctest.h"

using namespace bookmatch;
using bookmatch::testing::TempDir;

namespace {

CorruptionConfig rates(double cd, double cs, double wd, double wr) {
  CorruptionConfig cfg;
  cfg.p_char_del = cd;
  cfg.p_char_sub = cs;
  cfg.p_word_del = wd;
  cfg.p_word_rep = wr;
  return cfg;
}

Catalog small_catalog() {
  std::vector<CatalogEntry> entries;
  const char* titles[] = {"dune",           "war and peace", "the hobbit",
                          "il nome della rosa", "la sombra del viento", "rayuela",
                          "el aleph",       "cien anos de soledad", "don quijote",
                          "la casa verde",  "pedro paramo",  "ficciones"};
  int i = 0;
  for (const char* t : titles) {
    entries.push_back({"b" + std::to_string(i++), "author " + std::to_string(i), t, ""});
  }
  return Catalog::from_entries(entries);
}

}  // namespace

TEST_CASE("corrupt_text identity and annihilation configs") {
  Rng rng(71);
  const std::string text = "war and peace tolstoy";
  CHECK(corrupt_text(text, rates(0, 0, 0, 0), rng, {}) == text);
  CHECK(corrupt_text(text, rates(1, 0, 0, 0), rng, {}) == "");
  CHECK(corrupt_text(text, rates(0, 0, 1, 0), rng, {}) == "");
  CHECK(corrupt_text("", rates(0.5, 0.5, 0.5, 0.5), rng, {"x"}) == "");
}

TEST_CASE("full substitution keeps length and draws from the alphabet") {
  Rng rng(72);
  CorruptionConfig cfg = rates(0, 1, 0, 0);
  cfg.alphabet = "xyz";
  const std::string out = corrupt_text("abcdef", cfg, rng, {});
  CHECK(out.size() == 6);
  for (char c : out) CHECK((c == 'x' || c == 'y' || c == 'z'));
}

TEST_CASE("full word replacement draws whole tokens from the vocabulary") {
  Rng rng(73);
  const CorruptionConfig cfg = rates(0, 0, 0, 1);
  const std::vector<std::string> vocab{"alpha", "beta"};
  const auto out = split_tokens(corrupt_text("one two three", cfg, rng, vocab));
  REQUIRE(out.size() == 3);
  for (const auto& t : out) CHECK((t == "alpha" || t == "beta"));
  // Empty vocabulary: replacement keeps the original token.
  Rng rng2(73);
  CHECK(corrupt_text("one two", cfg, rng2, {}) == "one two");
}

TEST_CASE("corrupt_text is deterministic in the rng state") {
  const CorruptionConfig cfg;  // default rates
  Rng a(99), b(99), c(100);
  const std::string text = "il nome della rosa umberto eco";
  const std::vector<std::string> vocab{"rosa", "eco", "nome"};
  CHECK(corrupt_text(text, cfg, a, vocab) == corrupt_text(text, cfg, b, vocab));
  // A different stream is allowed to differ (and does for this seed pair).
  Rng a2(99);
  CHECK(corrupt_text(text, cfg, a2, vocab) != corrupt_text(text, cfg, c, vocab));
}

TEST_CASE("corrupt_text handles multi-byte characters as single units") {
  Rng rng(74);
  CorruptionConfig cfg = rates(0, 1, 0, 0);
  cfg.alphabet = "ñ";
  const std::string out = corrupt_text("año", cfg, rng, {});
  CHECK(out == "ñññ");
}

TEST_CASE("expected length decreases monotonically with p_char_del") {
  const std::string text = "la sombra del viento carlos ruiz zafon";
  double means[3];
  int pi = 0;
  for (const double p : {0.0, 0.2, 0.5}) {
    Rng rng(75);
    double total = 0.0;
    for (int i = 0; i < 1000; ++i) {
      total += double(utf8_to_utf32(corrupt_text(text, rates(p, 0, 0, 0), rng, {})).size());
    }
    means[pi++] = total / 1000.0;
  }
  CHECK(means[0] == doctest::Approx(double(text.size())));
  CHECK(means[0] > means[1]);
  CHECK(means[1] > means[2]);
}

TEST_CASE("corruption config validation") {
  CHECK_THROWS_AS(rates(-0.1, 0, 0, 0).validate(), UsageError);
  CHECK_THROWS_AS(rates(0, 1.5, 0, 0).validate(), UsageError);
  CorruptionConfig cfg;
  cfg.alphabet.clear();
  CHECK_THROWS_AS(cfg.validate(), UsageError);
  CHECK_NOTHROW(CorruptionConfig{}.validate());
}

TEST_CASE("catalog_vocabulary collects unique sorted tokens") {
  const Catalog cat = Catalog::from_entries({
      {"a", "Ana Woolf", "the waves", ""},
      {"b", "Virginia Woolf", "the years", ""},
  });
  const auto vocab = TextCorruptor::catalog_vocabulary(cat);
  CHECK(std::is_sorted(vocab.begin(), vocab.end()));
  CHECK(std::set<std::string>(vocab.begin(), vocab.end()).size() == vocab.size());
  CHECK(std::count(vocab.begin(), vocab.end(), "woolf") == 1);
  CHECK(std::count(vocab.begin(), vocab.end(), "the") == 1);
}

TEST_CASE("gen_rerank_dataset invariants") {
  const Catalog cat = small_catalog();
  EmbedConfig ecfg;
  ecfg.dim = 128;
  CorruptionConfig ccfg;
  ccfg.seed = 5;
  const std::size_t k = 4;
  const auto samples = gen_rerank_dataset(cat, ecfg, k, 400, ccfg, 2);
  REQUIRE(samples.size() == 400);

  std::size_t included = 0;
  for (const auto& s : samples) {
    REQUIRE(s.candidates.size() == k);
    REQUIRE(s.scores.size() == k);
    REQUIRE(s.label <= k);
    // Candidate lists stay sorted by score, unique positions.
    CHECK(std::is_sorted(s.scores.begin(), s.scores.end(), std::greater<>()));
    CHECK(std::set<std::size_t>(s.candidates.begin(), s.candidates.end()).size() == k);
    const auto src_pos = cat.position_of(s.source_id);
    REQUIRE(src_pos.has_value());
    const bool present =
        std::count(s.candidates.begin(), s.candidates.end(), *src_pos) > 0;
    if (s.label < k) {
      ++included;
      REQUIRE(s.candidates[s.label] == *src_pos);
    } else {
      REQUIRE(!present);
    }
    CHECK(normalize_text(s.corrupted_text) == s.corrupted_text);
  }
  // Fair coin at 400 draws: allow 4 sigma.
  CHECK(double(included) / 400.0 == doctest::Approx(0.5).epsilon(0.11));

  // Same config -> identical dataset, any thread count.
  const auto again = gen_rerank_dataset(cat, ecfg, k, 400, ccfg, 1);
  REQUIRE(again.size() == samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    CHECK(again[i].corrupted_text == samples[i].corrupted_text);
    CHECK(again[i].candidates == samples[i].candidates);
    CHECK(again[i].scores == samples[i].scores);
    CHECK(again[i].label == samples[i].label);
  }
}

TEST_CASE("gen_rerank_dataset guards") {
  const Catalog cat = small_catalog();
  EmbedConfig ecfg;
  // Catalogue must be strictly larger than k.
  CHECK_THROWS_AS(gen_rerank_dataset(cat, ecfg, cat.size(), 10, CorruptionConfig{}),
                  UsageError);
  CHECK_THROWS_AS(gen_rerank_dataset(cat, ecfg, 0, 10, CorruptionConfig{}), UsageError);
}

TEST_CASE("samples JSONL round trip") {
  TempDir dir;
  const Catalog cat = small_catalog();
  EmbedConfig ecfg;
  ecfg.dim = 64;
  const auto samples = gen_rerank_dataset(cat, ecfg, 3, 50, CorruptionConfig{});
  const auto p = dir.file("samples.jsonl");
  write_samples(samples, cat, true, p);
  const LoadedSamples back = read_samples(p);
  REQUIRE(back.samples.size() == 50);
  REQUIRE(back.k == 3);
  for (std::size_t i = 0; i < 50; ++i) {
    CHECK(back.samples[i].corrupted_text == samples[i].corrupted_text);
    CHECK(back.samples[i].candidates == samples[i].candidates);
    CHECK(back.samples[i].scores == samples[i].scores);
    CHECK(back.samples[i].label == samples[i].label);
    REQUIRE(back.candidate_texts[i].size() == 3);
    for (std::size_t r = 0; r < 3; ++r) {
      CHECK(back.candidate_texts[i][r] ==
            compose_target_text(cat.at(samples[i].candidates[r])));
    }
  }
}

TEST_CASE("read_samples validates the schema") {
  TempDir dir;
  const auto p = dir.file("bad.jsonl");
  bookmatch::testing::write_file(
      p, "{\"corrupted_text\":\"x\",\"source_id\":\"a\",\"candidates\":[0,1],"
         "\"candidate_texts\":[\"t\"],\"scores\":[0.5,0.4],\"label\":0,\"k\":2}\n");
  CHECK_THROWS_AS(read_samples(p), DataError);
  bookmatch::testing::write_file(
      p, "{\"corrupted_text\":\"x\",\"source_id\":\"a\",\"candidates\":[0,1],"
         "\"candidate_texts\":[\"t\",\"u\"],\"scores\":[0.5,0.4],\"label\":5,\"k\":2}\n");
  CHECK_THROWS_AS(read_samples(p), DataError);
}

TEST_CASE("gen_benchmark shape, ground truth, and determinism") {
  BenchmarkConfig cfg;
  cfg.n_targets = 50;
  cfg.n_queries = 20;
  cfg.seed = 17;
  cfg.detections_per_image = 7;
  const Benchmark bench = gen_benchmark(cfg);
  REQUIRE(bench.catalog.size() == 50);
  REQUIRE(bench.detections.size() == 20);

  std::set<std::string> texts;
  for (const auto& e : bench.catalog.entries()) {
    CHECK(!e.author.empty());
    CHECK(!e.title.empty());
    texts.insert(compose_target_text(e));
  }
  CHECK(texts.size() == 50);  // composed texts unique

  std::set<std::string> gt_seen;
  for (std::size_t i = 0; i < bench.detections.size(); ++i) {
    const auto& d = bench.detections[i];
    REQUIRE(d.gt_ids.has_value());
    REQUIRE(d.gt_ids->size() == 1);
    CHECK(bench.catalog.position_of((*d.gt_ids)[0]).has_value());
    CHECK(gt_seen.insert((*d.gt_ids)[0]).second);  // sampled without replacement
    CHECK(d.gt_label == GtLabel::book);
    CHECK(d.image_id == "img" + std::string(i / 7 == 0 ? "0000" : "000" + std::to_string(i / 7)));
    CHECK(!d.ocr_text.empty());
  }

  const Benchmark again = gen_benchmark(cfg);
  REQUIRE(again.catalog.size() == bench.catalog.size());
  for (std::size_t i = 0; i < again.catalog.size(); ++i) {
    CHECK(again.catalog.at(i).id == bench.catalog.at(i).id);
    CHECK(again.catalog.at(i).title == bench.catalog.at(i).title);
  }
  for (std::size_t i = 0; i < again.detections.size(); ++i) {
    CHECK(again.detections[i].ocr_text == bench.detections[i].ocr_text);
    CHECK(again.detections[i].gt_ids == bench.detections[i].gt_ids);
  }
}

TEST_CASE("gen_benchmark nil fraction points at withheld entries") {
  BenchmarkConfig cfg;
  cfg.n_targets = 40;
  cfg.n_queries = 20;
  cfg.nil_fraction = 0.25;
  cfg.seed = 19;
  const Benchmark bench = gen_benchmark(cfg);
  REQUIRE(bench.catalog.size() == 40);
  REQUIRE(bench.detections.size() == 20);
  std::size_t nil = 0;
  for (const auto& d : bench.detections) {
    REQUIRE(d.gt_ids.has_value());
    if (d.gt_ids->empty()) {
      ++nil;
      CHECK(d.gt_label == GtLabel::book);  // a real book, just not in the list
    }
  }
  CHECK(nil == 5);  // round(0.25 * 20)
}

TEST_CASE("gen_benchmark zero corruption echoes the composed text") {
  BenchmarkConfig cfg;
  cfg.n_targets = 10;
  cfg.n_queries = 10;
  cfg.corruption = rates(0, 0, 0, 0);
  cfg.seed = 21;
  const Benchmark bench = gen_benchmark(cfg);
  for (const auto& d : bench.detections) {
    const auto pos = bench.catalog.position_of((*d.gt_ids)[0]);
    REQUIRE(pos.has_value());
    CHECK(normalize_text(d.ocr_text) == compose_target_text(bench.catalog.at(*pos)));
  }
}

TEST_CASE("gen_benchmark guards") {
  BenchmarkConfig cfg;
  cfg.n_targets = 5;
  cfg.n_queries = 6;
  CHECK_THROWS_AS(gen_benchmark(cfg), UsageError);
  cfg.n_queries = 0;
  CHECK(gen_benchmark(cfg).detections.empty());
  cfg = BenchmarkConfig{};
  cfg.nil_fraction = 1.5;
  CHECK_THROWS_AS(gen_benchmark(cfg), UsageError);
}
