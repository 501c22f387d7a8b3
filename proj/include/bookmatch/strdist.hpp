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
#ifndef BOOKMATCH_STRDIST_HPP_
#define BOOKMATCH_STRDIST_HPP_

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bookmatch/corpus.hpp"

namespace bookmatch {

// Levenshtein distance over Unicode scalar values (not bytes). The UTF-8
// overloads decode first. Myers bit-parallel when the shorter string fits a
// word, two-row dynamic program otherwise.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein(std::string_view a_utf8, std::string_view b_utf8);

// Distance capped at limit: returns the exact distance when it is <= limit,
// any value > limit otherwise.
std::size_t levenshtein_bounded(std::u32string_view a, std::u32string_view b, std::size_t limit);

// 1 - distance / max(len_a, len_b); two empty strings compare as 1.
double normalized_similarity(std::u32string_view a, std::u32string_view b);
double normalized_similarity(std::string_view a_utf8, std::string_view b_utf8);

// Exhaustive best-match search of every detection against every catalogue
// entry (compose_target_text), with exact pruning: a length-difference and a
// character-count lower bound skip candidates that provably cannot beat the
// running best. Ties break to the lower catalogue position. Results are
// identical to the unpruned argmax.
std::vector<MatchRecord> fuzzy_best_match(const std::vector<Detection>& detections,
                                          const Catalog& catalog, bool normalize = true,
                                          int threads = 1);

}  // namespace bookmatch

#endif  // BOOKMATCH_STRDIST_HPP_
