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
#ifndef BOOKMATCH_LAP_HPP_
#define BOOKMATCH_LAP_HPP_

#include <cstddef>
#include <vector>

#include "bookmatch/simtopk.hpp"

namespace bookmatch {

// Injective rows -> columns mapping and the sum of the selected entries.
struct Assignment {
  std::vector<std::size_t> row_to_col;
  double total = 0.0;
};

// Maximum-weight rectangular assignment (rows <= cols required) via
// successive shortest augmenting paths on the cost transform
// max_entry - entry. All arithmetic in 64-bit reals. Throws UsageError on a
// rows > cols shape, DataError on non-finite entries.
Assignment solve_lap_max(const SimilarityMatrix& s);

// Exhaustive test oracle; guarded to rows <= 8, cols <= 10.
Assignment brute_force_lap(const SimilarityMatrix& s);

}  // namespace bookmatch

#endif  // BOOKMATCH_LAP_HPP_
