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
#ifndef BOOKMATCH_SIMTOPK_HPP_
#define BOOKMATCH_SIMTOPK_HPP_

#include <cstddef>
#include <fstream>
#include <string>
#include <vector>

#include "bookmatch/corpus.hpp"
#include "bookmatch/embed.hpp"

namespace bookmatch {

inline constexpr std::size_t kDefaultDenseLimit = 500'000'000;
inline constexpr std::size_t kDefaultBlockSize = 4096;

// Dense row-major similarity matrix, rows = queries, cols = targets.
struct SimilarityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> data;

  float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
};

struct Candidate {
  std::size_t position = 0;  // target row index
  float score = 0.0f;        // cosine similarity
};

// Strict total order used everywhere candidates are ranked: higher score
// first, ties broken by lower position.
inline bool candidate_better(const Candidate& a, const Candidate& b) {
  if (a.score != b.score) return a.score > b.score;
  return a.position < b.position;
}

// Deterministic dot product: four independent accumulators combined in a
// fixed tree, all sums in double.
double dot_f32(const float* a, const float* b, std::size_t n);

// Supplier of target embedding blocks so the full target matrix never has to
// be resident. Blocks arrive in row order; `reset` rewinds to row zero.
class TargetSource {
 public:
  virtual ~TargetSource() = default;
  virtual std::size_t size() const = 0;
  virtual std::size_t dim() const = 0;
  virtual void reset() = 0;
  // Fills `block` with the next slice of target rows and sets `start` to the
  // absolute index of its first row. Returns false when exhausted.
  virtual bool next_block(EmbeddingMatrix& block, std::size_t& start) = 0;
};

// Serves an in-memory embedding matrix.
class MatrixTargetSource : public TargetSource {
 public:
  MatrixTargetSource(const EmbeddingMatrix& matrix, std::size_t block_size);
  std::size_t size() const override { return matrix_.rows(); }
  std::size_t dim() const override { return matrix_.dim(); }
  void reset() override { next_ = 0; }
  bool next_block(EmbeddingMatrix& block, std::size_t& start) override;

 private:
  const EmbeddingMatrix& matrix_;
  std::size_t block_size_;
  std::size_t next_ = 0;
};

// Embeds catalogue entries on the fly, block by block.
class CatalogTargetSource : public TargetSource {
 public:
  CatalogTargetSource(const Catalog& catalog, const EmbedConfig& config,
                      bool normalize, std::size_t block_size, int threads);
  std::size_t size() const override { return texts_.size(); }
  std::size_t dim() const override { return config_.dim; }
  void reset() override { next_ = 0; }
  bool next_block(EmbeddingMatrix& block, std::size_t& start) override;

 private:
  std::vector<std::string> texts_;
  EmbedConfig config_;
  std::size_t block_size_;
  int threads_;
  std::size_t next_ = 0;
};

// Streams an EMB1 file without loading it whole; rows are validated with the
// same norm rules as read_embeddings.
class FileTargetSource : public TargetSource {
 public:
  FileTargetSource(const std::string& path, std::size_t block_size);
  std::size_t size() const override { return rows_; }
  std::size_t dim() const override { return dim_; }
  void reset() override;
  bool next_block(EmbeddingMatrix& block, std::size_t& start) override;

 private:
  std::string path_;
  std::ifstream in_;
  std::size_t block_size_;
  std::size_t rows_ = 0;
  std::size_t dim_ = 0;
  std::size_t next_ = 0;
};

// Dense similarity matrix S = B T^T. Refuses to allocate more than
// `dense_limit` entries (ResourceLimitError).
SimilarityMatrix similarity_matrix(const EmbeddingMatrix& queries,
                                   TargetSource& targets,
                                   std::size_t dense_limit, int threads);
SimilarityMatrix similarity_matrix(const EmbeddingMatrix& queries,
                                   const EmbeddingMatrix& targets,
                                   std::size_t dense_limit, int threads);

// Exact top-k per query over a streamed target source. Each list holds
// exactly min(k, targets.size()) candidates sorted best first. Results are
// identical for any block size and thread count.
std::vector<std::vector<Candidate>> top_k_candidates(
    const EmbeddingMatrix& queries, TargetSource& targets, std::size_t k,
    int threads);

// Per-row argmax of a dense matrix; ties go to the lower column.
std::vector<Candidate> argmax_rows(const SimilarityMatrix& s);

}  // namespace bookmatch

#endif  // BOOKMATCH_SIMTOPK_HPP_
