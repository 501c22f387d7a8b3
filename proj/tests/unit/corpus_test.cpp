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

#include "bookmatch/corpus.hpp"

#include <string>
#include <vector>

#include "bookmatch/util.hpp"
#include "common/temp.hpp"
#include "doctest.h"

using namespace bookmatch;
using bookmatch::testing::TempDir;
using bookmatch::testing::write_file;

TEST_CASE("catalog CSV loads rows in file order") {
  TempDir dir;
  const auto p = dir.file("cat.csv");
  write_file(p,
             "id,author,title,isbn\n"
             "b1,Frank Herbert,Dune,9780441172719\n"
             "b2,,\"Comma, in title\",\n"
             "b3,\"Quote \"\"inside\"\"\",Plain,123\n");
  const Catalog c = load_catalog(p);
  REQUIRE(c.size() == 3);
  CHECK(c.at(0).id == "b1");
  CHECK(c.at(0).author == "Frank Herbert");
  CHECK(c.at(1).title == "Comma, in title");
  CHECK(c.at(1).author == "");
  CHECK(c.at(2).author == "Quote \"inside\"");
  CHECK(c.position_of("b2") == std::size_t{1});
  CHECK(!c.position_of("nope").has_value());
}

TEST_CASE("catalog CSV round trip preserves quoting") {
  TempDir dir;
  std::vector<CatalogEntry> entries{
      {"a", "Auth, or", "Ti\"tle", "1"},
      {"b", "Line\nbreak", "T", ""},
  };
  const Catalog c = Catalog::from_entries(entries);
  const auto p = dir.file("cat.csv");
  write_catalog(c, p);
  const Catalog back = load_catalog(p);
  REQUIRE(back.size() == 2);
  CHECK(back.at(0).author == "Auth, or");
  CHECK(back.at(0).title == "Ti\"tle");
  CHECK(back.at(1).author == "Line\nbreak");
}

TEST_CASE("catalog validation rejects bad rows") {
  CHECK_THROWS_AS(Catalog::from_entries({{"x", "a", "t", ""}, {"x", "b", "u", ""}}),
                  DataError);
  CHECK_THROWS_AS(Catalog::from_entries({{"", "a", "t", ""}}), DataError);
  CHECK_THROWS_AS(Catalog::from_entries({{"x", "", "", ""}}), DataError);
}

TEST_CASE("catalog CSV parse errors") {
  TempDir dir;
  const auto p = dir.file("bad.csv");
  write_file(p, "");
  CHECK_THROWS_AS(load_catalog(p), DataError);
  write_file(p, "id,author,name,isbn\nb1,a,t,\n");
  CHECK_THROWS_AS(load_catalog(p), DataError);
  CHECK_THROWS_AS(load_catalog(dir.file("missing.csv")), DataError);
  // Header only: valid, empty catalogue.
  write_file(p, "id,author,title,isbn\n");
  CHECK(load_catalog(p).empty());
}

TEST_CASE("compose_target_text") {
  CHECK(compose_target_text({"i", "A", "B", ""}) == "a b");
  CHECK(compose_target_text({"i", "", "Dune", ""}) == "dune");
  CHECK(compose_target_text({"i", "Tolkien", "The Hobbit", ""}) == "tolkien the hobbit");
  CHECK(compose_target_text({"i", "A.", "B!", ""}, false) == "A. B!");
}

TEST_CASE("detections JSONL round trip with all gt shapes") {
  TempDir dir;
  std::vector<Detection> dets{
      {"i1", "s1", "dune herbert", std::nullopt, std::nullopt},
      {"i1", "s2", "mystery spine", std::vector<std::string>{}, GtLabel::not_a_book},
      {"i2", "s1", "two in one", std::vector<std::string>{"a", "b"}, GtLabel::merged_books},
      {"i2", "s2", "plain", std::vector<std::string>{"a"}, GtLabel::book},
  };
  const auto p = dir.file("det.jsonl");
  write_detections(dets, p);
  const auto back = load_detections(p);
  REQUIRE(back.size() == 4);
  CHECK(!back[0].gt_ids.has_value());
  CHECK(!back[0].gt_label.has_value());
  REQUIRE(back[1].gt_ids.has_value());
  CHECK(back[1].gt_ids->empty());
  CHECK(back[1].gt_label == GtLabel::not_a_book);
  CHECK(back[2].gt_ids == std::vector<std::string>{"a", "b"});
  CHECK(back[2].gt_label == GtLabel::merged_books);
  CHECK(back[3].ocr_text == "plain");
}

TEST_CASE("detections JSONL parse errors") {
  TempDir dir;
  const auto p = dir.file("det.jsonl");
  write_file(p, "{\"image_id\":\"i\",\"segment_id\":\"s\",\"ocr_text\":\"x\"}\nnot json\n");
  CHECK_THROWS_AS(load_detections(p), DataError);
  write_file(p, "{\"segment_id\":\"s\",\"ocr_text\":\"x\"}\n");
  CHECK_THROWS_AS(load_detections(p), DataError);
  write_file(p, "{\"image_id\":\"i\",\"segment_id\":\"s\",\"ocr_text\":\"x\",\"gt_label\":\"spine\"}\n");
  CHECK_THROWS_AS(load_detections(p), DataError);
}

TEST_CASE("matches JSONL round trip") {
  TempDir dir;
  std::vector<MatchRecord> recs{
      {"i1", "s1", "b1", 0.75, MatchStage::hungarian},
      {"i1", "s2", std::string(kNotInList), 0.1, MatchStage::rerank},
  };
  const auto p = dir.file("m.jsonl");
  write_matches(recs, p);
  const auto back = read_matches(p);
  REQUIRE(back.size() == 2);
  CHECK(back[0].predicted_id == "b1");
  CHECK(back[0].score == doctest::Approx(0.75));
  CHECK(back[0].stage == MatchStage::hungarian);
  CHECK(back[1].predicted_id == kNotInList);
  CHECK(back[1].stage == MatchStage::rerank);

  write_matches({}, p);
  CHECK(read_matches(p).empty());
}

TEST_CASE("report JSON keeps exact counts") {
  TempDir dir;
  EvalReport r;
  r.accuracy = 1.0;
  r.n_total = 5;
  r.n_correct = 5;
  r.stage = "argmax";
  r.mode = "matching-only";
  r.counts = {{"gt_book", 5}};
  const auto p = dir.file("rep.json");
  write_report(r, p);
  const EvalReport back = read_report(p);
  CHECK(back.accuracy == 1.0);
  CHECK(back.n_total == 5);
  CHECK(back.n_correct == 5);
  CHECK(back.stage == "argmax");
  CHECK(back.counts.at("gt_book") == 5);
}

TEST_CASE("gt label and stage string mapping") {
  CHECK(to_string(GtLabel::book) == "book");
  CHECK(gt_label_from_string("merged_books") == GtLabel::merged_books);
  CHECK_THROWS_AS(gt_label_from_string("bogus"), DataError);
  CHECK(to_string(MatchStage::argmax) == "argmax");
  CHECK(match_stage_from_string("fuzzy") == MatchStage::fuzzy);
  CHECK_THROWS_AS(match_stage_from_string("bogus"), DataError);
}
