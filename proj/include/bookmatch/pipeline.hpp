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
#ifndef BOOKMATCH_PIPELINE_HPP_
#define BOOKMATCH_PIPELINE_HPP_

#include <optional>
#include <string>
#include <vector>

#include "bookmatch/corpus.hpp"
#include "bookmatch/embed.hpp"
#include "bookmatch/rerank.hpp"
#include "bookmatch/simtopk.hpp"

namespace bookmatch {

enum class Stage1 { fuzzy, embed };
enum class Stage2 { none, hungarian, rerank };

std::string_view to_string(Stage1 s);
std::string_view to_string(Stage2 s);
Stage1 stage1_from_string(std::string_view s);  // throws UsageError
Stage2 stage2_from_string(std::string_view s);  // throws UsageError

// Full matching-run configuration. Invariants (checked by validate):
// hungarian requires stage1 = embed; rerank requires stage1 = embed and
// exactly one of model / scores_path; fuzzy implies stage2 = none; tau only
// applies to the always-match stages (none, hungarian).
struct PipelineConfig {
  Stage1 stage1 = Stage1::embed;
  Stage2 stage2 = Stage2::none;
  std::size_t topk = 10;
  EmbedConfig embed;
  std::size_t dense_limit = kDefaultDenseLimit;
  std::optional<double> tau;
  bool normalize = true;  // canonicalize texts before matching
  std::size_t block_size = kDefaultBlockSize;
  int threads = 1;
  std::string target_emb_path;            // EMB1 targets; empty = embed catalogue
  std::optional<RerankModel> model;       // rerank scorer
  std::string scores_path;                // external rerank scores JSONL

  void validate() const;
};

// Runs the configured two-stage match of every detection against the
// catalogue. Output order parallels the detections; predicted_id is a
// catalogue id or "__not_in_list__".
std::vector<MatchRecord> run_match(const std::vector<Detection>& detections,
                                   const Catalog& catalog, const PipelineConfig& cfg);

enum class EvalMode { matching_only, detection_and_matching };

std::string_view to_string(EvalMode mode);
EvalMode eval_mode_from_string(std::string_view s);  // throws UsageError

// Joins matches to ground truth on (image_id, segment_id) and scores them.
// matching_only keeps every detection except not_a_book rows (and requires
// non-empty gt_ids); detection_and_matching keeps everything, expecting
// "__not_in_list__" for not_a_book rows and empty gt_ids. merged_books
// counts correct when the prediction hits any of its gt_ids.
EvalReport evaluate_accuracy(const std::vector<MatchRecord>& matches,
                             const std::vector<Detection>& detections, EvalMode mode);

}  // namespace bookmatch

#endif  // BOOKMATCH_PIPELINE_HPP_
