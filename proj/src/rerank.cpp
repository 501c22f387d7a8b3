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
#include "bookmatch/rerank.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

#include "bookmatch/strdist.hpp"
#include "bookmatch/text.hpp"
#include "bookmatch/util.hpp"

namespace bookmatch {

namespace {

using nlohmann::json;

std::set<std::string> token_set(std::string_view text) {
  auto tokens = split_tokens(text);
  return {tokens.begin(), tokens.end()};
}

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

}  // namespace

FeatureVector extract_features(std::string_view query, std::string_view candidate,
                               double candidate_score, std::size_t rank) {
  const auto q_tokens = token_set(query);
  const auto c_tokens = token_set(candidate);
  std::size_t common = 0;
  for (const auto& t : q_tokens) common += c_tokens.count(t);
  const std::size_t united = q_tokens.size() + c_tokens.size() - common;

  const std::u32string q32 = utf8_to_utf32(query);
  const std::u32string c32 = utf8_to_utf32(candidate);
  const std::size_t longer = std::max(q32.size(), c32.size());
  const std::size_t shorter = std::min(q32.size(), c32.size());

  FeatureVector f;
  f[0] = normalized_similarity(q32, c32);
  f[1] = united == 0 ? 1.0 : static_cast<double>(common) / static_cast<double>(united);
  f[2] = clamp01(candidate_score);
  f[3] = longer == 0 ? 1.0 : static_cast<double>(shorter) / static_cast<double>(longer);
  f[4] = q_tokens.empty() ? 1.0
                          : static_cast<double>(common) / static_cast<double>(q_tokens.size());
  f[5] = c_tokens.empty() ? 1.0
                          : static_cast<double>(common) / static_cast<double>(c_tokens.size());
  f[6] = 1.0 / (1.0 + static_cast<double>(rank));
  f[7] = 1.0;
  return f;
}

namespace {

// Softmax of the K candidate logits plus the none logit, max-shifted.
std::vector<double> class_probabilities(const std::vector<double>& logits) {
  double top = logits[0];
  for (double l : logits) top = std::max(top, l);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t j = 0; j < logits.size(); ++j) {
    p[j] = std::exp(logits[j] - top);
    sum += p[j];
  }
  for (double& x : p) x /= sum;
  return p;
}

struct PreparedSample {
  std::vector<FeatureVector> features;  // one per candidate
  std::size_t label = 0;                // 0..k for k = "none"
};

double dot8(const std::array<double, 8>& w, const FeatureVector& f) {
  double s = 0.0;
  for (std::size_t d = 0; d < 8; ++d) s += w[d] * f[d];
  return s;
}

std::vector<double> sample_logits(const RerankModel& model, const PreparedSample& ps) {
  std::vector<double> logits(ps.features.size() + 1);
  for (std::size_t j = 0; j < ps.features.size(); ++j) {
    logits[j] = dot8(model.weights, ps.features[j]);
  }
  logits.back() = model.none_bias;
  return logits;
}

// Argmax with the shared tie policy: lower candidate index wins, the none
// class (last) loses ties to any candidate.
std::size_t select_class(const std::vector<double>& logits) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < logits.size(); ++j) {
    if (logits[j] > logits[best]) best = j;
  }
  return best;
}

}  // namespace

RerankModel train_reranker(const std::vector<SynthSample>& samples,
                           const std::vector<std::vector<std::string>>& candidate_texts,
                           std::size_t k, const TrainConfig& cfg) {
  if (samples.empty()) throw UsageError("training requires at least one sample");
  if (candidate_texts.size() != samples.size()) {
    throw UsageError("candidate_texts must parallel samples");
  }
  if (k == 0) throw UsageError("k must be >= 1");
  if (cfg.batch_size == 0) throw UsageError("batch_size must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");

  std::vector<PreparedSample> prepared(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (s.candidates.size() != k || candidate_texts[i].size() != k ||
        s.scores.size() != k) {
      throw DataError("sample " + std::to_string(i) + " does not have exactly " +
                      std::to_string(k) + " candidates");
    }
    if (s.label > k) {
      throw DataError("sample " + std::to_string(i) + " has label out of range");
    }
    prepared[i].label = s.label;
    prepared[i].features.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      prepared[i].features.push_back(
          extract_features(s.corrupted_text, candidate_texts[i][j], s.scores[j], j));
    }
  }

  RerankModel model;
  model.k = k;
  model.seed = cfg.seed;
  model.epochs = cfg.epochs;
  model.learning_rate = cfg.learning_rate;

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(prepared.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t batch_start = 0; batch_start < order.size();
         batch_start += cfg.batch_size) {
      const std::size_t batch_end = std::min(order.size(), batch_start + cfg.batch_size);
      const double scale = cfg.learning_rate / static_cast<double>(batch_end - batch_start);
      std::array<double, 8> grad_w{};
      double grad_bias = 0.0;
      for (std::size_t b = batch_start; b < batch_end; ++b) {
        const PreparedSample& ps = prepared[order[b]];
        const auto probs = class_probabilities(sample_logits(model, ps));
        epoch_loss += -std::log(std::max(probs[ps.label], 1e-300));
        for (std::size_t j = 0; j < k; ++j) {
          const double delta = probs[j] - (j == ps.label ? 1.0 : 0.0);
          for (std::size_t d = 0; d < 8; ++d) grad_w[d] += delta * ps.features[j][d];
        }
        grad_bias += probs[k] - (ps.label == k ? 1.0 : 0.0);
      }
      for (std::size_t d = 0; d < 8; ++d) model.weights[d] -= scale * grad_w[d];
      model.none_bias -= scale * grad_bias;
    }
    epoch_loss /= static_cast<double>(prepared.size());
    if (!std::isfinite(epoch_loss)) {
      throw std::runtime_error("training diverged: non-finite loss at epoch " +
                               std::to_string(epoch + 1) + " (learning_rate " +
                               std::to_string(cfg.learning_rate) + ")");
    }
    model.loss_curve.push_back(epoch_loss);
  }

  std::size_t correct = 0;
  for (const auto& ps : prepared) {
    if (select_class(sample_logits(model, ps)) == ps.label) ++correct;
  }
  model.final_train_accuracy =
      static_cast<double>(correct) / static_cast<double>(prepared.size());
  return model;
}

RerankModel train_reranker(const std::vector<SynthSample>& samples, const Catalog& catalog,
                           const TrainConfig& cfg) {
  if (samples.empty()) throw UsageError("training requires at least one sample");
  const std::size_t k = samples[0].candidates.size();
  std::vector<std::vector<std::string>> texts(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i) {
    texts[i].reserve(samples[i].candidates.size());
    for (std::size_t pos : samples[i].candidates) {
      if (pos >= catalog.size()) {
        throw DataError("sample " + std::to_string(i) + " references catalogue position " +
                        std::to_string(pos) + " beyond size " + std::to_string(catalog.size()));
      }
      texts[i].push_back(compose_target_text(catalog.at(pos)));
    }
  }
  return train_reranker(samples, texts, k, cfg);
}

std::optional<std::size_t> rerank_select(const RerankModel& model, std::string_view query,
                                         const std::vector<std::string>& candidate_texts,
                                         const std::vector<double>& candidate_scores,
                                         double* probability) {
  if (candidate_texts.empty()) {
    if (probability != nullptr) *probability = 1.0;
    return std::nullopt;
  }
  if (candidate_texts.size() != candidate_scores.size()) {
    throw UsageError("candidate texts and scores must have equal length");
  }
  if (candidate_texts.size() > model.k) {
    throw UsageError("candidate list length " + std::to_string(candidate_texts.size()) +
                     " exceeds model k " + std::to_string(model.k));
  }
  PreparedSample ps;
  ps.features.reserve(candidate_texts.size());
  for (std::size_t j = 0; j < candidate_texts.size(); ++j) {
    ps.features.push_back(
        extract_features(query, candidate_texts[j], candidate_scores[j], j));
  }
  const auto logits = sample_logits(model, ps);
  const std::size_t chosen = select_class(logits);
  if (probability != nullptr) *probability = class_probabilities(logits)[chosen];
  if (chosen == candidate_texts.size()) return std::nullopt;
  return chosen;
}

std::optional<std::size_t> select_from_scores(const std::vector<double>& scores,
                                              double none_score) {
  if (scores.empty()) return std::nullopt;
  std::size_t best = 0;
  for (std::size_t j = 1; j < scores.size(); ++j) {
    if (scores[j] > scores[best]) best = j;
  }
  if (none_score > scores[best]) return std::nullopt;
  return best;
}

void write_model(const RerankModel& model, const std::string& path) {
  json j;
  j["k"] = model.k;
  j["weights"] = model.weights;
  j["none_bias"] = model.none_bias;
  j["seed"] = model.seed;
  j["epochs"] = model.epochs;
  j["learning_rate"] = model.learning_rate;
  j["loss_curve"] = model.loss_curve;
  j["final_train_accuracy"] = model.final_train_accuracy;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
  out.flush();
  if (!out) throw DataError("write failed for " + path);
}

RerankModel read_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError(path + ": invalid JSON: " + e.what());
  }
  RerankModel model;
  try {
    model.k = j.at("k").get<std::size_t>();
    const auto weights = j.at("weights").get<std::vector<double>>();
    if (weights.size() != 8) {
      throw DataError(path + ": weights must have exactly 8 entries");
    }
    std::copy(weights.begin(), weights.end(), model.weights.begin());
    model.none_bias = j.at("none_bias").get<double>();
    model.seed = j.at("seed").get<std::uint64_t>();
    model.epochs = j.at("epochs").get<std::size_t>();
    model.learning_rate = j.value("learning_rate", model.learning_rate);
    model.loss_curve = j.value("loss_curve", model.loss_curve);
    model.final_train_accuracy =
        j.value("final_train_accuracy", model.final_train_accuracy);
  } catch (const json::exception& e) {
    throw DataError(path + ": " + e.what());
  }
  if (model.k == 0) throw DataError(path + ": k must be >= 1");
  for (double w : model.weights) {
    if (!std::isfinite(w)) throw DataError(path + ": non-finite weight");
  }
  if (!std::isfinite(model.none_bias)) throw DataError(path + ": non-finite none_bias");
  return model;
}

std::map<std::pair<std::string, std::string>, ExternalScores> read_external_scores(
    const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  std::map<std::pair<std::string, std::string>, ExternalScores> result;
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
      auto key = std::make_pair(j.at("image_id").get<std::string>(),
                                j.at("segment_id").get<std::string>());
      ExternalScores scores;
      scores.scores = j.at("scores").get<std::vector<double>>();
      scores.none_score = j.at("none_score").get<double>();
      if (!result.emplace(std::move(key), std::move(scores)).second) {
        throw DataError(where + ": duplicate (image_id, segment_id)");
      }
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    }
  }
  return result;
}

}  // namespace bookmatch
