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
#include "bookmatch/lap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "bookmatch/util.hpp"

namespace bookmatch {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Successive shortest augmenting paths with dual updates for rectangular
// min-cost assignment, n rows <= m cols (Crouse, IEEE TAES 2016). One
// Dijkstra pass per row; duals keep reduced costs nonnegative, so later
// passes usually settle after a single column scan. Costs are derived from
// the similarity entries on the fly (top - s) so no second matrix is
// materialized.
std::vector<std::size_t> augmenting_path_min(const SimilarityMatrix& s,
                                             double top) {
  const std::size_t n = s.rows;
  const std::size_t m = s.cols;
  auto c = [&](std::size_t i, std::size_t j) {
    return top - static_cast<double>(s.data[i * m + j]);
  };
  std::vector<double> u(n, 0.0);
  std::vector<double> v(m, 0.0);
  std::vector<std::int64_t> col4row(n, -1);
  std::vector<std::int64_t> row4col(m, -1);
  std::vector<double> shortest(m);
  std::vector<std::size_t> pred(m);
  std::vector<char> in_tree_row(n);
  std::vector<char> settled_col(m);
  std::vector<std::size_t> remaining(m);

  for (std::size_t cur = 0; cur < n; ++cur) {
    std::fill(shortest.begin(), shortest.end(), kInf);
    std::fill(in_tree_row.begin(), in_tree_row.end(), 0);
    std::fill(settled_col.begin(), settled_col.end(), 0);
    for (std::size_t j = 0; j < m; ++j) remaining[j] = j;
    std::size_t num_remaining = m;

    double min_val = 0.0;
    std::size_t i = cur;
    std::int64_t sink = -1;
    while (sink < 0) {
      in_tree_row[i] = 1;
      std::size_t best_it = 0;
      double lowest = kInf;
      for (std::size_t it = 0; it < num_remaining; ++it) {
        const std::size_t j = remaining[it];
        const double r = min_val + c(i, j) - u[i] - v[j];
        if (r < shortest[j]) {
          pred[j] = i;
          shortest[j] = r;
        }
        if (shortest[j] < lowest) {
          lowest = shortest[j];
          best_it = it;
        }
      }
      min_val = lowest;
      const std::size_t j = remaining[best_it];
      remaining[best_it] = remaining[--num_remaining];
      settled_col[j] = 1;
      if (row4col[j] < 0) {
        sink = static_cast<std::int64_t>(j);
      } else {
        i = static_cast<std::size_t>(row4col[j]);
      }
    }

    u[cur] += min_val;
    for (std::size_t r = 0; r < n; ++r) {
      if (in_tree_row[r] && r != cur) {
        u[r] += min_val - shortest[static_cast<std::size_t>(col4row[r])];
      }
    }
    for (std::size_t j = 0; j < m; ++j) {
      if (settled_col[j]) v[j] -= min_val - shortest[j];
    }

    // Augment along the alternating path back to the free row.
    std::size_t j = static_cast<std::size_t>(sink);
    while (true) {
      const std::size_t r = pred[j];
      row4col[j] = static_cast<std::int64_t>(r);
      const std::int64_t jnext = col4row[r];
      col4row[r] = static_cast<std::int64_t>(j);
      if (r == cur) break;
      j = static_cast<std::size_t>(jnext);
    }
  }

  std::vector<std::size_t> result(n);
  for (std::size_t i2 = 0; i2 < n; ++i2) {
    result[i2] = static_cast<std::size_t>(col4row[i2]);
  }
  return result;
}

void check_shape(const SimilarityMatrix& s) {
  if (s.rows == 0) throw UsageError("assignment requires at least one row");
  if (s.rows > s.cols) {
    throw UsageError("assignment requires rows <= cols, got " +
                     std::to_string(s.rows) + " x " + std::to_string(s.cols));
  }
  for (const float x : s.data) {
    if (!std::isfinite(x)) {
      throw DataError("similarity matrix has a non-finite entry");
    }
  }
}

double assignment_total(const SimilarityMatrix& s,
                        const std::vector<std::size_t>& row_to_col) {
  double total = 0.0;
  for (std::size_t i = 0; i < s.rows; ++i) {
    total += static_cast<double>(s.at(i, row_to_col[i]));
  }
  return total;
}

}  // namespace

Assignment solve_lap_max(const SimilarityMatrix& s) {
  check_shape(s);
  float top = s.data[0];
  for (const float x : s.data) top = std::max(top, x);
  Assignment a;
  a.row_to_col = augmenting_path_min(s, static_cast<double>(top));
  a.total = assignment_total(s, a.row_to_col);
  return a;
}

Assignment brute_force_lap(const SimilarityMatrix& s) {
  check_shape(s);
  if (s.rows > 8 || s.cols > 10) {
    throw UsageError("brute_force_lap is capped at 8 x 10");
  }
  std::vector<std::size_t> current(s.rows, 0);
  std::vector<bool> used(s.cols, false);
  Assignment best;
  best.total = -kInf;
  auto recurse = [&](auto&& self, std::size_t i, double acc) -> void {
    if (i == s.rows) {
      if (acc > best.total) {
        best.total = acc;
        best.row_to_col = current;
      }
      return;
    }
    for (std::size_t j = 0; j < s.cols; ++j) {
      if (used[j]) continue;
      used[j] = true;
      current[i] = j;
      self(self, i + 1, acc + static_cast<double>(s.at(i, j)));
      used[j] = false;
    }
  };
  recurse(recurse, 0, 0.0);
  // Recompute in ascending row order so ties with solve_lap_max are bitwise.
  best.total = assignment_total(s, best.row_to_col);
  return best;
}

}  // namespace bookmatch
