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
#include "bookmatch/strdist.hpp"

#include <algorithm>
#include <cstdint>
#include <numeric>

#include "bookmatch/text.hpp"
#include "bookmatch/util.hpp"

namespace bookmatch {

namespace {

void trim_common(std::u32string_view& a, std::u32string_view& b) {
  std::size_t prefix = 0;
  const std::size_t lim = std::min(a.size(), b.size());
  while (prefix < lim && a[prefix] == b[prefix]) ++prefix;
  a.remove_prefix(prefix);
  b.remove_prefix(prefix);
  std::size_t suffix = 0;
  const std::size_t lim2 = std::min(a.size(), b.size());
  while (suffix < lim2 && a[a.size() - 1 - suffix] == b[b.size() - 1 - suffix]) ++suffix;
  a.remove_suffix(suffix);
  b.remove_suffix(suffix);
}

// Myers (1999) bit-parallel edit distance; pattern length <= 64.
std::size_t myers_distance(std::u32string_view pattern, std::u32string_view text) {
  const std::size_t m = pattern.size();
  std::vector<std::pair<char32_t, std::uint64_t>> peq;
  peq.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    const char32_t c = pattern[i];
    auto it = std::find_if(peq.begin(), peq.end(), [c](const auto& p) { return p.first == c; });
    if (it == peq.end()) {
      peq.emplace_back(c, std::uint64_t{1} << i);
    } else {
      it->second |= std::uint64_t{1} << i;
    }
  }
  std::sort(peq.begin(), peq.end());

  const std::uint64_t top_bit = std::uint64_t{1} << (m - 1);
  std::uint64_t vp = m == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m) - 1;
  std::uint64_t vn = 0;
  std::size_t score = m;
  for (char32_t c : text) {
    std::uint64_t eq = 0;
    auto it = std::lower_bound(peq.begin(), peq.end(), c,
                               [](const auto& p, char32_t key) { return p.first < key; });
    if (it != peq.end() && it->first == c) eq = it->second;
    const std::uint64_t d0 = (((eq & vp) + vp) ^ vp) | eq | vn;
    std::uint64_t hp = vn | ~(d0 | vp);
    std::uint64_t hn = vp & d0;
    if (hp & top_bit) ++score;
    if (hn & top_bit) --score;
    hp = (hp << 1) | 1;
    hn <<= 1;
    vp = hn | ~(d0 | hp);
    vn = hp & d0;
  }
  return score;
}

std::size_t two_row_distance(std::u32string_view a, std::u32string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  std::vector<std::size_t> row(a.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= b.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= a.size(); ++j) {
      const std::size_t sub = diag + (a[j - 1] == b[i - 1] ? 0 : 1);
      diag = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, sub});
    }
  }
  return row[a.size()];
}

}  // namespace

std::size_t levenshtein(std::u32string_view a, std::u32string_view b) {
  trim_common(a, b);
  if (a.empty()) return b.size();
  if (b.empty()) return a.size();
  if (a.size() > b.size()) std::swap(a, b);
  if (a.size() <= 64) return myers_distance(a, b);
  return two_row_distance(a, b);
}

std::size_t levenshtein(std::string_view a_utf8, std::string_view b_utf8) {
  return levenshtein(utf8_to_utf32(a_utf8), utf8_to_utf32(b_utf8));
}

std::size_t levenshtein_bounded(std::u32string_view a, std::u32string_view b, std::size_t limit) {
  const std::size_t diff = a.size() > b.size() ? a.size() - b.size() : b.size() - a.size();
  if (diff > limit) return limit + 1;
  const std::size_t d = levenshtein(a, b);
  return d > limit ? limit + 1 : d;
}

double normalized_similarity(std::u32string_view a, std::u32string_view b) {
  const std::size_t max_len = std::max(a.size(), b.size());
  if (max_len == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(max_len);
}

double normalized_similarity(std::string_view a_utf8, std::string_view b_utf8) {
  return normalized_similarity(utf8_to_utf32(a_utf8), utf8_to_utf32(b_utf8));
}

namespace {

// Sorted character histogram; L1 distance of two histograms / 2 is an edit
// distance lower bound (one edit moves at most two counts by one).
using CharHist = std::vector<std::pair<char32_t, std::int32_t>>;

CharHist make_hist(std::u32string_view s) {
  std::u32string sorted(s);
  std::sort(sorted.begin(), sorted.end());
  CharHist h;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    h.emplace_back(sorted[i], static_cast<std::int32_t>(j - i));
    i = j;
  }
  return h;
}

std::int64_t hist_l1(const CharHist& a, const CharHist& b) {
  std::int64_t l1 = 0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      l1 += a[i++].second;
    } else if (a[i].first > b[j].first) {
      l1 += b[j++].second;
    } else {
      l1 += std::abs(a[i].second - b[j].second);
      ++i, ++j;
    }
  }
  for (; i < a.size(); ++i) l1 += a[i].second;
  for (; j < b.size(); ++j) l1 += b[j].second;
  return l1;
}

}  // namespace

std::vector<MatchRecord> fuzzy_best_match(const std::vector<Detection>& detections,
                                          const Catalog& catalog, bool normalize, int threads) {
  if (catalog.empty()) throw UsageError("fuzzy matching requires a non-empty catalogue");

  const std::size_t n_targets = catalog.size();
  std::vector<std::u32string> targets(n_targets);
  std::vector<CharHist> target_hists(n_targets);
  parallel_for(n_targets, threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t t = begin; t < end; ++t) {
      targets[t] = utf8_to_utf32(compose_target_text(catalog.at(t), normalize));
      target_hists[t] = make_hist(targets[t]);
    }
  });

  std::vector<MatchRecord> records(detections.size());
  parallel_for(detections.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const std::u32string query = utf8_to_utf32(
          normalize ? normalize_text(detections[i].ocr_text) : detections[i].ocr_text);
      const CharHist query_hist = make_hist(query);
      const std::int64_t qlen = static_cast<std::int64_t>(query.size());

      // Best tracked as the exact rational 1 - best_d/best_m, so pruning and
      // ties never depend on floating-point rounding.
      std::size_t best_pos = 0;
      std::int64_t best_d = 1, best_m = 1;  // sentinel: similarity 0 on 1 char
      bool have_best = false;
      for (std::size_t t = 0; t < n_targets; ++t) {
        const std::int64_t tlen = static_cast<std::int64_t>(targets[t].size());
        const std::int64_t m = std::max(qlen, tlen);
        if (m == 0) {  // both empty: similarity 1 by convention
          best_pos = t;
          best_d = 0;
          best_m = 1;
          have_best = true;
          break;
        }
        if (!have_best) {
          best_d = static_cast<std::int64_t>(levenshtein(query, targets[t]));
          best_m = m;
          best_pos = t;
          have_best = true;
          if (best_d == 0) break;
          continue;
        }
        // Lower bounds on the distance; skip when they already lose.
        const std::int64_t lb =
            std::max(std::abs(qlen - tlen), (hist_l1(query_hist, target_hists[t]) + 1) / 2);
        if ((m - lb) * best_m <= (best_m - best_d) * m) continue;
        // Largest distance that still beats the running best.
        std::int64_t limit = (best_d * m) / best_m;
        if (limit * best_m == best_d * m) --limit;
        const std::size_t d =
            levenshtein_bounded(query, targets[t], static_cast<std::size_t>(limit));
        if (static_cast<std::int64_t>(d) <= limit) {
          best_d = static_cast<std::int64_t>(d);
          best_m = m;
          best_pos = t;
          if (best_d == 0) break;
        }
      }

      const double score =
          best_m == 0 ? 1.0 : 1.0 - static_cast<double>(best_d) / static_cast<double>(best_m);
      records[i] = MatchRecord{detections[i].image_id, detections[i].segment_id,
                               catalog.at(best_pos).id, score, MatchStage::fuzzy};
    }
  });
  return records;
}

}  // namespace bookmatch
