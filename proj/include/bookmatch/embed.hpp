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
#ifndef BOOKMATCH_EMBED_HPP_
#define BOOKMATCH_EMBED_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace bookmatch {

// Hashed character n-gram embedder. Deterministic: the same (text, config)
// always produces identical bytes, on any platform and thread count.
struct EmbedConfig {
  std::uint32_t dim = 1024;
  std::vector<int> ngram_sizes = {2, 3, 4};
  std::uint64_t seed = 0;

  void validate() const;  // dim >= 8, ngram_sizes non-empty with each >= 1
};

// Row-major unit-norm (or exactly zero) float32 vectors.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dim)
      : rows_(rows), dim_(dim), data_(rows * dim, 0.0f) {}

  std::size_t rows() const { return rows_; }
  std::size_t dim() const { return dim_; }
  float* row(std::size_t i) { return data_.data() + i * dim_; }
  const float* row(std::size_t i) const { return data_.data() + i * dim_; }
  std::vector<float>& data() { return data_; }
  const std::vector<float>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::vector<float> data_;
};

// Embeds one already-normalized text: pad with one leading and one trailing
// space, hash every character n-gram (sizes from cfg) with seeded 64-bit
// FNV-1a over the n-gram's UTF-8 bytes, bucket counts mod dim, L2-normalize.
// Empty text maps to the zero vector.
std::vector<float> embed_text(std::string_view normalized_text, const EmbedConfig& cfg);
void embed_text(std::string_view normalized_text, const EmbedConfig& cfg, float* out);

// Row i = embed_text(texts[i]). Parallel over rows; output independent of
// thread count.
EmbeddingMatrix embed_batch(const std::vector<std::string>& texts, const EmbedConfig& cfg,
                            int threads = 1);

// Embedding file: magic "EMB1", u32-LE row count, u32-LE dim, then
// rows*dim IEEE-754 float32 LE, row-major. Round-trips are bit-exact.
void write_embeddings(const EmbeddingMatrix& m, const std::string& path);

// Validates the unit-norm-or-zero row invariant: rows within 1e-6 pass
// silently, rows within 1e-3 are renormalized with a warning, anything else
// is rejected. Warnings go to `warn` (defaults to stderr).
EmbeddingMatrix read_embeddings(const std::string& path,
                                const std::function<void(const std::string&)>& warn = {});

// One-row check behind the rule above. Returns true if the row had to be
// renormalized; throws DataError (prefixed with `context`) when it is neither
// unit nor zero norm.
bool validate_row_norm(float* row, std::size_t dim, std::size_t row_index,
                       const std::string& context);

}  // namespace bookmatch

#endif  // BOOKMATCH_EMBED_HPP_
