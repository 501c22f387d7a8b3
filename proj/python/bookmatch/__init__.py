# Copyright 2026 The bookmatch Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#      http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Noisy book-spine text to catalogue matching."""

from bookmatch._core import (
    DataError,
    ResourceLimitError,
    UsageError,
    corrupt_text,
    embed_text,
    eval_files,
    gen_benchmark_files,
    levenshtein,
    match_files,
    normalize_text,
    normalized_similarity,
    solve_lap_max,
    top_k,
)

__all__ = [
    "DataError",
    "ResourceLimitError",
    "UsageError",
    "corrupt_text",
    "embed_text",
    "eval_files",
    "gen_benchmark_files",
    "levenshtein",
    "match_files",
    "normalize_text",
    "normalized_similarity",
    "solve_lap_max",
    "top_k",
]
