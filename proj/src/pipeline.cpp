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
#include "bookmatch/pipeline.hpp"

#include <algorithm>
#include <map>
#include <memory>
#include <utility>

#include "bookmatch/lap.hpp"
#include "bookmatch/strdist.hpp"
#include "bookmatch/text.hpp"
#include "bookmatch/util.hpp"

namespace bookmatch {

std::string_view to_string(Stage1 s) {
  return s == Stage1::fuzzy ? "fuzzy" : "embed";
}

std::string_view to_string(Stage2 s) {
  switch (s) {
    case Stage2::none: return "none";
    case Stage2::hungarian: return "hungarian";
    case Stage2::rerank: return "rerank";
  }
  return "none";
}

Stage1 stage1_from_string(std::string_view s) {
  if (s == "fuzzy") return Stage1::fuzzy;
  if (s == "embed") return Stage1::embed;
  throw UsageError("unknown stage1 '" + std::string(s) + "', expected fuzzy or embed");
}

Stage2 stage2_from_string(std::string_view s) {
  if (s == "none") return Stage2::none;
  if (s == "hungarian") return Stage2::hungarian;
  if (s == "rerank") return Stage2::rerank;
  throw UsageError("unknown stage2 '" + std::string(s) +
                   "', expected none, hungarian or rerank");
}

std::string_view to_string(EvalMode mode) {
  return mode == EvalMode::matching_only ? "matching-only" : "detection-and-matching";
}

EvalMode eval_mode_from_string(std::string_view s) {
  if (s == "matching-only") return EvalMode::matching_only;
  if (s == "detection-and-matching") return EvalMode::detection_and_matching;
  throw UsageError("unknown mode '" + std::string(s) +
                   "', expected matching-only or detection-and-matching");
}

void PipelineConfig::validate() const {
  if (stage1 == Stage1::fuzzy && stage2 != Stage2::none) {
    throw UsageError("--stage1 fuzzy implies --stage2 none");
  }
  if (stage2 == Stage2::hungarian && stage1 != Stage1::embed) {
    throw UsageError("--stage2 hungarian requires --stage1 embed");
  }
  if (stage2 == Stage2::rerank) {
    if (stage1 != Stage1::embed) {
      throw UsageError("--stage2 rerank requires --stage1 embed");
    }
    if (model.has_value() == !scores_path.empty()) {
      throw UsageError("--stage2 rerank requires exactly one of --model and --scores");
    }
  } else {
    if (model.has_value() || !scores_path.empty()) {
      throw UsageError("--model/--scores only apply to --stage2 rerank");
    }
  }
  if (tau.has_value() && stage2 == Stage2::rerank) {
    throw UsageError("--tau does not apply to --stage2 rerank, which rejects via "
                     "its none class");
  }
  if (stage1 == Stage1::fuzzy && !target_emb_path.empty()) {
    throw UsageError("--target-emb does not apply to --stage1 fuzzy");
  }
  if (topk == 0) throw UsageError("--topk must be >= 1");
  if (block_size == 0) throw UsageError("--block-size must be >= 1");
  embed.validate();
}

namespace {

std::unique_ptr<TargetSource> make_target_source(const Catalog& catalog,
                                                 const PipelineConfig& cfg) {
  if (!cfg.target_emb_path.empty()) {
    auto source = std::make_unique<FileTargetSource>(cfg.target_emb_path, cfg.block_size);
    if (source->size() != catalog.size()) {
      throw DataError(cfg.target_emb_path + " has " + std::to_string(source->size()) +
                      " rows but the catalogue has " + std::to_string(catalog.size()) +
                      " entries");
    }
    return source;
  }
  return std::make_unique<CatalogTargetSource>(catalog, cfg.embed, cfg.normalize,
                                               cfg.block_size, cfg.threads);
}

EmbeddingMatrix embed_queries(const std::vector<Detection>& detections,
                              const PipelineConfig& cfg) {
  std::vector<std::string> texts;
  texts.reserve(detections.size());
  for (const auto& d : detections) {
    texts.push_back(cfg.normalize ? normalize_text(d.ocr_text) : d.ocr_text);
  }
  return embed_batch(texts, cfg.embed, cfg.threads);
}

MatchRecord make_record(const Detection& d, std::string predicted, double score,
                        MatchStage stage) {
  MatchRecord r;
  r.image_id = d.image_id;
  r.segment_id = d.segment_id;
  r.predicted_id = std::move(predicted);
  r.score = score;
  r.stage = stage;
  return r;
}

std::vector<MatchRecord> match_argmax(const std::vector<Detection>& detections,
                                      const Catalog& catalog, const PipelineConfig& cfg) {
  const EmbeddingMatrix queries = embed_queries(detections, cfg);
  auto targets = make_target_source(catalog, cfg);
  // Argmax is streamed top-1, so the dense guard never limits this stage.
  const auto best = top_k_candidates(queries, *targets, 1, cfg.threads);
  std::vector<MatchRecord> records;
  records.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    records.push_back(make_record(detections[i], catalog.at(best[i][0].position).id,
                                  static_cast<double>(best[i][0].score),
                                  MatchStage::argmax));
  }
  return records;
}

std::vector<MatchRecord> match_hungarian(const std::vector<Detection>& detections,
                                         const Catalog& catalog,
                                         const PipelineConfig& cfg) {
  const EmbeddingMatrix queries = embed_queries(detections, cfg);
  auto targets = make_target_source(catalog, cfg);
  const SimilarityMatrix s =
      similarity_matrix(queries, *targets, cfg.dense_limit, cfg.threads);
  const Assignment assignment = solve_lap_max(s);
  std::vector<MatchRecord> records;
  records.reserve(detections.size());
  for (std::size_t i = 0; i < detections.size(); ++i) {
    const std::size_t col = assignment.row_to_col[i];
    records.push_back(make_record(detections[i], catalog.at(col).id,
                                  static_cast<double>(s.at(i, col)),
                                  MatchStage::hungarian));
  }
  return records;
}

std::vector<MatchRecord> match_rerank(const std::vector<Detection>& detections,
                                      const Catalog& catalog, const PipelineConfig& cfg) {
  const EmbeddingMatrix queries = embed_queries(detections, cfg);
  auto targets = make_target_source(catalog, cfg);
  const auto lists = top_k_candidates(queries, *targets, cfg.topk, cfg.threads);

  // Joins and size checks happen up front so errors are deterministic and no
  // exception has to cross a worker-thread boundary.
  std::vector<const ExternalScores*> external(detections.size(), nullptr);
  std::map<std::pair<std::string, std::string>, ExternalScores> external_by_key;
  if (!cfg.scores_path.empty()) {
    external_by_key = read_external_scores(cfg.scores_path);
    for (std::size_t i = 0; i < detections.size(); ++i) {
      const Detection& d = detections[i];
      const auto it = external_by_key.find({d.image_id, d.segment_id});
      if (it == external_by_key.end()) {
        throw DataError(cfg.scores_path + " has no entry for (" + d.image_id + ", " +
                        d.segment_id + ")");
      }
      if (it->second.scores.size() != lists[i].size()) {
        throw DataError(cfg.scores_path + ": (" + d.image_id + ", " + d.segment_id +
                        ") has " + std::to_string(it->second.scores.size()) +
                        " scores for " + std::to_string(lists[i].size()) + " candidates");
      }
      external[i] = &it->second;
    }
  } else if (cfg.model->k < std::min(cfg.topk, targets->size())) {
    throw UsageError("model k " + std::to_string(cfg.model->k) +
                     " is smaller than the candidate list length " +
                     std::to_string(std::min(cfg.topk, targets->size())));
  }

  std::vector<MatchRecord> records(detections.size());
  parallel_for(detections.size(), cfg.threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const Detection& d = detections[i];
      const auto& list = lists[i];
      std::optional<std::size_t> chosen;
      double score = 0.0;
      if (cfg.model.has_value()) {
        const std::string query =
            cfg.normalize ? normalize_text(d.ocr_text) : d.ocr_text;
        std::vector<std::string> texts;
        std::vector<double> scores;
        texts.reserve(list.size());
        scores.reserve(list.size());
        for (const auto& c : list) {
          texts.push_back(compose_target_text(catalog.at(c.position), cfg.normalize));
          scores.push_back(static_cast<double>(c.score));
        }
        chosen = rerank_select(*cfg.model, query, texts, scores, &score);
      } else {
        chosen = select_from_scores(external[i]->scores, external[i]->none_score);
        score = chosen.has_value() ? external[i]->scores[*chosen]
                                   : external[i]->none_score;
      }
      const std::string predicted =
          chosen.has_value() ? catalog.at(list[*chosen].position).id
                             : std::string(kNotInList);
      records[i] = make_record(d, predicted, score, MatchStage::rerank);
    }
  });
  return records;
}

}  // namespace

std::vector<MatchRecord> run_match(const std::vector<Detection>& detections,
                                   const Catalog& catalog, const PipelineConfig& cfg) {
  cfg.validate();
  if (catalog.empty()) throw UsageError("catalogue must be non-empty");

  std::vector<MatchRecord> records;
  switch (cfg.stage2) {
    case Stage2::none:
      records = cfg.stage1 == Stage1::fuzzy
                    ? fuzzy_best_match(detections, catalog, cfg.normalize, cfg.threads)
                    : match_argmax(detections, catalog, cfg);
      break;
    case Stage2::hungarian:
      records = match_hungarian(detections, catalog, cfg);
      break;
    case Stage2::rerank:
      records = match_rerank(detections, catalog, cfg);
      break;
  }

  // Optional reject threshold for the always-match stages.
  if (cfg.tau.has_value() && cfg.stage2 != Stage2::rerank) {
    for (auto& r : records) {
      if (r.score < *cfg.tau) r.predicted_id = std::string(kNotInList);
    }
  }
  return records;
}

EvalReport evaluate_accuracy(const std::vector<MatchRecord>& matches,
                             const std::vector<Detection>& detections, EvalMode mode) {
  std::map<std::pair<std::string, std::string>, const Detection*> by_key;
  for (const auto& d : detections) {
    if (!by_key.emplace(std::make_pair(d.image_id, d.segment_id), &d).second) {
      throw DataError("duplicate detection key (" + d.image_id + ", " + d.segment_id + ")");
    }
  }

  EvalReport report;
  report.mode = std::string(to_string(mode));
  std::map<std::pair<std::string, std::string>, const MatchRecord*> matched;
  for (const auto& m : matches) {
    const auto key = std::make_pair(m.image_id, m.segment_id);
    if (by_key.find(key) == by_key.end()) {
      throw DataError("match (" + m.image_id + ", " + m.segment_id +
                      ") joins to no detection");
    }
    if (!matched.emplace(key, &m).second) {
      throw DataError("duplicate match for (" + m.image_id + ", " + m.segment_id + ")");
    }
  }

  std::string stage;
  bool stage_mixed = false;
  for (const auto& d : detections) {
    if (!d.gt_ids.has_value()) {
      throw DataError("detection (" + d.image_id + ", " + d.segment_id +
                      ") has no ground truth, cannot evaluate");
    }
    // Rows labeled book, or unlabeled with gt ids, count as book spines.
    const GtLabel label = d.gt_label.value_or(GtLabel::book);
    const bool in_scope = mode == EvalMode::detection_and_matching ||
                          (label != GtLabel::not_a_book && !d.gt_ids->empty());
    if (!in_scope) continue;

    const auto it = matched.find(std::make_pair(d.image_id, d.segment_id));
    if (it == matched.end()) {
      throw DataError("detection (" + d.image_id + ", " + d.segment_id +
                      ") has no match record");
    }
    const MatchRecord& m = *it->second;
    if (stage.empty()) {
      stage = std::string(to_string(m.stage));
    } else if (stage != to_string(m.stage)) {
      stage_mixed = true;
    }

    bool correct;
    if (label == GtLabel::not_a_book || d.gt_ids->empty()) {
      report.counts["gt_not_in_list"] += 1;
      correct = m.predicted_id == kNotInList;
    } else {
      report.counts[label == GtLabel::merged_books ? "gt_merged_books" : "gt_book"] += 1;
      correct = std::find(d.gt_ids->begin(), d.gt_ids->end(), m.predicted_id) !=
                d.gt_ids->end();
    }
    if (m.predicted_id == kNotInList) report.counts["predicted_not_in_list"] += 1;
    report.n_total += 1;
    if (correct) report.n_correct += 1;
  }

  report.stage = stage_mixed ? "mixed" : stage;
  report.accuracy = report.n_total == 0
                        ? 0.0
                        : static_cast<double>(report.n_correct) /
                              static_cast<double>(report.n_total);
  return report;
}

}  // namespace bookmatch
