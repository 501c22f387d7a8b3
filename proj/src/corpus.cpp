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
#include "bookmatch/corpus.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "bookmatch/text.hpp"
#include "bookmatch/util.hpp"
#include "json.hpp"

namespace bookmatch {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, std::size_t line, const std::string& what) {
  throw DataError(path + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  return out;
}

void finish_output(std::ofstream& out, const std::string& path) {
  out.flush();
  if (!out) throw DataError("write failed for " + path);
}

// RFC-4180 record reader. Returns false at EOF. `line` tracks the physical
// line the record started on for error messages.
bool read_csv_record(std::istream& in, const std::string& path, std::size_t& line,
                     std::vector<std::string>& fields) {
  fields.clear();
  int c = in.get();
  if (c == EOF) return false;
  const std::size_t record_line = line;
  std::string field;
  bool quoted = false;
  bool at_field_start = true;
  for (;; c = in.get()) {
    if (quoted) {
      if (c == EOF) fail(path, record_line, "unterminated quoted field");
      if (c == '"') {
        int peek = in.peek();
        if (peek == '"') {
          field.push_back('"');
          in.get();
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(static_cast<char>(c));
      }
      continue;
    }
    if (c == '"' && at_field_start) {
      quoted = true;
      at_field_start = false;
      continue;
    }
    if (c == '"') fail(path, record_line, "stray quote in unquoted field");
    if (c == ',' ) {
      fields.push_back(std::move(field));
      field.clear();
      at_field_start = true;
      continue;
    }
    if (c == '\r') {
      if (in.peek() == '\n') in.get();
      ++line;
      break;
    }
    if (c == '\n') {
      ++line;
      break;
    }
    if (c == EOF) break;
    field.push_back(static_cast<char>(c));
    at_field_start = false;
  }
  fields.push_back(std::move(field));
  return true;
}

bool needs_csv_quoting(const std::string& s) {
  return s.find_first_of(",\"\r\n") != std::string::npos;
}

void write_csv_field(std::ostream& out, const std::string& s) {
  if (!needs_csv_quoting(s)) {
    out << s;
    return;
  }
  out << '"';
  for (char ch : s) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

const json* find_key(const json& obj, const char* key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

std::string require_string(const json& obj, const char* key, const std::string& path,
                           std::size_t line) {
  const json* v = find_key(obj, key);
  if (v == nullptr || !v->is_string()) {
    fail(path, line, std::string("missing or non-string key \"") + key + "\"");
  }
  return v->get<std::string>();
}

}  // namespace

Catalog Catalog::from_entries(std::vector<CatalogEntry> entries) {
  Catalog c;
  c.index_.reserve(entries.size());
  for (std::size_t pos = 0; pos < entries.size(); ++pos) {
    const CatalogEntry& e = entries[pos];
    if (e.id.empty()) {
      throw DataError("catalogue entry at position " + std::to_string(pos) + " has empty id");
    }
    if (e.author.empty() && e.title.empty()) {
      throw DataError("catalogue entry \"" + e.id + "\" has neither author nor title");
    }
    if (!c.index_.emplace(e.id, pos).second) {
      throw DataError("duplicate catalogue id \"" + e.id + "\"");
    }
  }
  c.entries_ = std::move(entries);
  return c;
}

std::optional<std::size_t> Catalog::position_of(std::string_view id) const {
  auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string compose_target_text(const CatalogEntry& e, bool normalize) {
  std::string joined;
  if (e.author.empty()) {
    joined = e.title;
  } else if (e.title.empty()) {
    joined = e.author;
  } else {
    joined = e.author + " " + e.title;
  }
  return normalize ? normalize_text(joined) : joined;
}

std::string_view to_string(GtLabel label) {
  switch (label) {
    case GtLabel::book: return "book";
    case GtLabel::not_a_book: return "not_a_book";
    case GtLabel::merged_books: return "merged_books";
  }
  return "book";
}

GtLabel gt_label_from_string(std::string_view s) {
  if (s == "book") return GtLabel::book;
  if (s == "not_a_book") return GtLabel::not_a_book;
  if (s == "merged_books") return GtLabel::merged_books;
  throw DataError("unknown gt_label \"" + std::string(s) + "\"");
}

std::string_view to_string(MatchStage stage) {
  switch (stage) {
    case MatchStage::fuzzy: return "fuzzy";
    case MatchStage::argmax: return "argmax";
    case MatchStage::hungarian: return "hungarian";
    case MatchStage::rerank: return "rerank";
  }
  return "fuzzy";
}

MatchStage match_stage_from_string(std::string_view s) {
  if (s == "fuzzy") return MatchStage::fuzzy;
  if (s == "argmax") return MatchStage::argmax;
  if (s == "hungarian") return MatchStage::hungarian;
  if (s == "rerank") return MatchStage::rerank;
  throw DataError("unknown stage \"" + std::string(s) + "\"");
}

Catalog load_catalog(const std::string& path) {
  std::ifstream in = open_input(path);
  std::size_t line = 1;
  std::vector<std::string> fields;
  if (!read_csv_record(in, path, line, fields)) {
    throw DataError(path + ": empty file, expected header id,author,title,isbn");
  }
  if (fields != std::vector<std::string>{"id", "author", "title", "isbn"}) {
    fail(path, 1, "bad header, expected id,author,title,isbn");
  }
  std::vector<CatalogEntry> entries;
  std::unordered_map<std::string, std::size_t> seen;
  while (true) {
    const std::size_t record_line = line;
    if (!read_csv_record(in, path, line, fields)) break;
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (fields.size() != 4) {
      fail(path, record_line,
           "expected 4 fields, got " + std::to_string(fields.size()));
    }
    CatalogEntry e{fields[0], fields[1], fields[2], fields[3]};
    if (e.id.empty()) fail(path, record_line, "empty id");
    if (e.author.empty() && e.title.empty()) {
      fail(path, record_line, "entry \"" + e.id + "\" has neither author nor title");
    }
    if (!seen.emplace(e.id, record_line).second) {
      fail(path, record_line, "duplicate catalogue id \"" + e.id + "\"");
    }
    entries.push_back(std::move(e));
  }
  return Catalog::from_entries(std::move(entries));
}

void write_catalog(const Catalog& catalog, const std::string& path) {
  std::ofstream out = open_output(path);
  out << "id,author,title,isbn\n";
  for (const CatalogEntry& e : catalog.entries()) {
    write_csv_field(out, e.id);
    out << ',';
    write_csv_field(out, e.author);
    out << ',';
    write_csv_field(out, e.title);
    out << ',';
    write_csv_field(out, e.isbn);
    out << '\n';
  }
  finish_output(out, path);
}

std::vector<Detection> load_detections(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<Detection> detections;
  std::set<std::pair<std::string, std::string>> keys;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.empty()) continue;
    json obj = json::parse(raw, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) fail(path, line, "malformed JSON object");
    Detection d;
    d.image_id = require_string(obj, "image_id", path, line);
    d.segment_id = require_string(obj, "segment_id", path, line);
    d.ocr_text = require_string(obj, "ocr_text", path, line);
    if (const json* gt = find_key(obj, "gt_ids")) {
      if (!gt->is_array()) fail(path, line, "gt_ids must be an array of strings");
      std::vector<std::string> ids;
      for (const json& v : *gt) {
        if (!v.is_string()) fail(path, line, "gt_ids must be an array of strings");
        ids.push_back(v.get<std::string>());
      }
      d.gt_ids = std::move(ids);
    }
    if (const json* label = find_key(obj, "gt_label")) {
      if (!label->is_string()) fail(path, line, "gt_label must be a string");
      try {
        d.gt_label = gt_label_from_string(label->get<std::string>());
      } catch (const DataError& e) {
        fail(path, line, e.what());
      }
    }
    if (d.gt_label == GtLabel::merged_books) {
      // multiple gt ids allowed
    } else if (d.gt_ids && d.gt_ids->size() > 1) {
      fail(path, line, "gt_ids with >1 entry requires gt_label merged_books");
    }
    if (!keys.emplace(d.image_id, d.segment_id).second) {
      fail(path, line, "duplicate detection key (" + d.image_id + ", " + d.segment_id + ")");
    }
    detections.push_back(std::move(d));
  }
  return detections;
}

void write_detections(const std::vector<Detection>& detections, const std::string& path) {
  std::ofstream out = open_output(path);
  for (const Detection& d : detections) {
    json obj{{"image_id", d.image_id}, {"segment_id", d.segment_id}, {"ocr_text", d.ocr_text}};
    if (d.gt_ids) obj["gt_ids"] = *d.gt_ids;
    if (d.gt_label) obj["gt_label"] = std::string(to_string(*d.gt_label));
    out << obj.dump() << '\n';
  }
  finish_output(out, path);
}

void write_matches(const std::vector<MatchRecord>& records, std::ostream& out) {
  for (const MatchRecord& r : records) {
    json obj{{"image_id", r.image_id},
             {"segment_id", r.segment_id},
             {"predicted_id", r.predicted_id},
             {"score", r.score},
             {"stage", std::string(to_string(r.stage))}};
    out << obj.dump() << '\n';
  }
}

void write_matches(const std::vector<MatchRecord>& records, const std::string& path) {
  std::ofstream out = open_output(path);
  write_matches(records, out);
  finish_output(out, path);
}

std::vector<MatchRecord> read_matches(const std::string& path) {
  std::ifstream in = open_input(path);
  std::vector<MatchRecord> records;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (raw.empty()) continue;
    json obj = json::parse(raw, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) fail(path, line, "malformed JSON object");
    MatchRecord r;
    r.image_id = require_string(obj, "image_id", path, line);
    r.segment_id = require_string(obj, "segment_id", path, line);
    r.predicted_id = require_string(obj, "predicted_id", path, line);
    const json* score = find_key(obj, "score");
    if (score == nullptr || !score->is_number()) fail(path, line, "missing or non-numeric score");
    r.score = score->get<double>();
    try {
      r.stage = match_stage_from_string(require_string(obj, "stage", path, line));
    } catch (const DataError& e) {
      fail(path, line, e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

void write_report(const EvalReport& report, const std::string& path) {
  std::ofstream out = open_output(path);
  json counts = json::object();
  for (const auto& [key, value] : report.counts) counts[key] = value;
  json obj{{"accuracy", report.accuracy}, {"n_total", report.n_total},
           {"n_correct", report.n_correct}, {"stage", report.stage},
           {"mode", report.mode},         {"counts", counts}};
  out << obj.dump(2) << '\n';
  finish_output(out, path);
}

EvalReport read_report(const std::string& path) {
  std::ifstream in = open_input(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  json obj = json::parse(buffer.str(), nullptr, false);
  if (obj.is_discarded() || !obj.is_object()) throw DataError(path + ": malformed JSON");
  EvalReport r;
  try {
    r.accuracy = obj.at("accuracy").get<double>();
    r.n_total = obj.at("n_total").get<std::size_t>();
    r.n_correct = obj.at("n_correct").get<std::size_t>();
    r.stage = obj.at("stage").get<std::string>();
    r.mode = obj.value("mode", std::string{});
    if (obj.contains("counts")) {
      for (const auto& [key, value] : obj.at("counts").items()) {
        r.counts[key] = value.get<std::size_t>();
      }
    }
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  return r;
}

}  // namespace bookmatch
