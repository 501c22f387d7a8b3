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
#ifndef BOOKMATCH_CORPUS_HPP_
#define BOOKMATCH_CORPUS_HPP_

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace bookmatch {

// Prediction sentinel for "this detection matches nothing in the catalogue".
inline constexpr std::string_view kNotInList = "__not_in_list__";

// One target-list row: a book the detections can be matched against.
struct CatalogEntry {
  std::string id;
  std::string author;
  std::string title;
  std::string isbn;
};

// An ordered target list with a unique-id index. Entry positions are the
// file order and are the "target positions" used by every matcher.
class Catalog {
 public:
  Catalog() = default;
  // Validates id uniqueness/non-emptiness and that author+title are not both
  // empty. Throws DataError.
  static Catalog from_entries(std::vector<CatalogEntry> entries);

  const std::vector<CatalogEntry>& entries() const { return entries_; }
  const CatalogEntry& at(std::size_t pos) const { return entries_[pos]; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  std::optional<std::size_t> position_of(std::string_view id) const;

 private:
  std::vector<CatalogEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Normalized "author title" string a catalogue entry is matched by. With
// normalize=false the raw concatenation is used instead.
std::string compose_target_text(const CatalogEntry& e, bool normalize = true);

enum class GtLabel { book, not_a_book, merged_books };

std::string_view to_string(GtLabel label);
GtLabel gt_label_from_string(std::string_view s);  // throws DataError

// One segmented text object from a bookshelf image. gt_ids semantics:
//   nullopt   -> unlabeled (no ground truth available)
//   empty     -> ground truth "not in list"
//   non-empty -> the catalogue id(s) of the true book(s)
struct Detection {
  std::string image_id;
  std::string segment_id;
  std::string ocr_text;
  std::optional<std::vector<std::string>> gt_ids;
  std::optional<GtLabel> gt_label;
};

enum class MatchStage { fuzzy, argmax, hungarian, rerank };

std::string_view to_string(MatchStage stage);
MatchStage match_stage_from_string(std::string_view s);  // throws DataError

// Final mapping for one detection; predicted_id is either a catalogue id or
// kNotInList.
struct MatchRecord {
  std::string image_id;
  std::string segment_id;
  std::string predicted_id;
  double score = 0.0;
  MatchStage stage = MatchStage::fuzzy;
};

struct EvalReport {
  double accuracy = 0.0;
  std::size_t n_total = 0;
  std::size_t n_correct = 0;
  std::string stage;
  std::string mode;
  std::map<std::string, std::size_t> counts;
};

// Catalogue CSV: UTF-8, header exactly `id,author,title,isbn`, RFC-4180
// quoting (quoted fields may contain commas, quotes, newlines).
Catalog load_catalog(const std::string& path);
void write_catalog(const Catalog& catalog, const std::string& path);

// Detections JSONL, one object per line.
std::vector<Detection> load_detections(const std::string& path);
void write_detections(const std::vector<Detection>& detections, const std::string& path);

// Matches JSONL, one object per line: image_id, segment_id, predicted_id,
// score, stage.
void write_matches(const std::vector<MatchRecord>& records, std::ostream& out);
void write_matches(const std::vector<MatchRecord>& records, const std::string& path);
std::vector<MatchRecord> read_matches(const std::string& path);

// Report JSON: accuracy, n_total, n_correct, stage, mode, counts.
void write_report(const EvalReport& report, const std::string& path);
EvalReport read_report(const std::string& path);

}  // namespace bookmatch

#endif  // BOOKMATCH_CORPUS_HPP_
