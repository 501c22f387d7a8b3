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
#ifndef BOOKMATCH_RERANK_HPP_
#define BOOKMATCH_RERANK_HPP_

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "bookmatch/corpus.hpp"
#include "bookmatch/synth.hpp"

namespace bookmatch {

// Pair features for (query, candidate); every component lies in [0, 1]:
// edit similarity, token-set Jaccard, clamped first-stage score, length
// ratio, query-token containment, candidate-token containment, reciprocal
// rank 1/(1+rank), and a constant bias.
using FeatureVector = std::array<double, 8>;

FeatureVector extract_features(std::string_view query, std::string_view candidate,
                               double candidate_score, std::size_t rank);

// Linear softmax scorer over the K candidates plus a "none" class whose
// logit is the trained bias. A heavier cross-encoder can replace it through
// the external-scores path while honoring the same K+1-way selection.
struct RerankModel {
  std::size_t k = 10;
  std::array<double, 8> weights{};
  double none_bias = 0.0;
  std::uint64_t seed = 0;
  std::size_t epochs = 20;
  double learning_rate = 0.1;
  std::vector<double> loss_curve;
  double final_train_accuracy = 0.0;
};

struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 0.1;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
};

// Mini-batch SGD on the K+1-way cross-entropy, zero-initialized, sample
// order reshuffled each epoch from the config seed. Bit-stable for a fixed
// seed and thread count 1 (training is single-threaded by design).
// candidate_texts[i][j] is the normalized text of samples[i].candidates[j].
RerankModel train_reranker(const std::vector<SynthSample>& samples,
                           const std::vector<std::vector<std::string>>& candidate_texts,
                           std::size_t k, const TrainConfig& cfg);
// Same, resolving candidate texts through the catalogue.
RerankModel train_reranker(const std::vector<SynthSample>& samples, const Catalog& catalog,
                           const TrainConfig& cfg);

inline constexpr std::size_t kNone = static_cast<std::size_t>(-1);

// Argmax over the K candidate scores and the none bias. Ties break to the
// lower candidate index; "none" loses ties to any candidate. Empty candidate
// list returns nullopt ("none"). When `probability` is given it receives the
// softmax probability of the winning class.
std::optional<std::size_t> rerank_select(const RerankModel& model, std::string_view query,
                                         const std::vector<std::string>& candidate_texts,
                                         const std::vector<double>& candidate_scores,
                                         double* probability = nullptr);

// The same selection rule over externally supplied scores.
std::optional<std::size_t> select_from_scores(const std::vector<double>& scores,
                                              double none_score);

// Model JSON: {"k", "weights" (8 numbers), "none_bias", "seed", "epochs"}
// plus training metadata. Unknown keys are ignored on read.
void write_model(const RerankModel& model, const std::string& path);
RerankModel read_model(const std::string& path);

// External per-candidate scores, JSONL with keys image_id, segment_id,
// scores (array), none_score; keyed by (image_id, segment_id).
struct ExternalScores {
  std::vector<double> scores;
  double none_score = 0.0;
};
std::map<std::pair<std::string, std::string>, ExternalScores> read_external_scores(
    const std::string& path);

}  // namespace bookmatch

#endif  // BOOKMATCH_RERANK_HPP_
