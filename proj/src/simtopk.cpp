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
#include "bookmatch/simtopk.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>

#include "bookmatch/text.hpp"
#include "bookmatch/util.hpp"

namespace bookmatch {

double dot_f32(const float* a, const float* b, std::size_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    s1 += static_cast<double>(a[i + 1]) * static_cast<double>(b[i + 1]);
    s2 += static_cast<double>(a[i + 2]) * static_cast<double>(b[i + 2]);
    s3 += static_cast<double>(a[i + 3]) * static_cast<double>(b[i + 3]);
  }
  for (; i < n; ++i) {
    s0 += static_cast<double>(a[i]) * static_cast<double>(b[i]);
  }
  return (s0 + s1) + (s2 + s3);
}

MatrixTargetSource::MatrixTargetSource(const EmbeddingMatrix& matrix,
                                       std::size_t block_size)
    : matrix_(matrix), block_size_(block_size) {
  if (block_size_ == 0) throw UsageError("block size must be positive");
}

bool MatrixTargetSource::next_block(EmbeddingMatrix& block,
                                    std::size_t& start) {
  if (next_ >= matrix_.rows()) return false;
  start = next_;
  const std::size_t count = std::min(block_size_, matrix_.rows() - next_);
  block = EmbeddingMatrix(count, matrix_.dim());
  std::memcpy(block.data().data(), matrix_.row(next_),
              count * matrix_.dim() * sizeof(float));
  next_ += count;
  return true;
}

CatalogTargetSource::CatalogTargetSource(const Catalog& catalog,
                                         const EmbedConfig& config,
                                         bool normalize,
                                         std::size_t block_size, int threads)
    : config_(config), block_size_(block_size), threads_(threads) {
  if (block_size_ == 0) throw UsageError("block size must be positive");
  config_.validate();
  texts_.reserve(catalog.size());
  for (const auto& entry : catalog.entries()) {
    texts_.push_back(compose_target_text(entry, normalize));
  }
}

bool CatalogTargetSource::next_block(EmbeddingMatrix& block,
                                     std::size_t& start) {
  if (next_ >= texts_.size()) return false;
  start = next_;
  const std::size_t count = std::min(block_size_, texts_.size() - next_);
  std::vector<std::string> slice(texts_.begin() + next_,
                                 texts_.begin() + next_ + count);
  block = embed_batch(slice, config_, threads_);
  next_ += count;
  return true;
}

FileTargetSource::FileTargetSource(const std::string& path,
                                   std::size_t block_size)
    : path_(path), block_size_(block_size) {
  if (block_size_ == 0) throw UsageError("block size must be positive");
  in_.open(path_, std::ios::binary);
  if (!in_) throw DataError("cannot open " + path_);
  char magic[4];
  if (!in_.read(magic, 4) || std::memcmp(magic, "EMB1", 4) != 0) {
    throw DataError(path_ + ": bad magic, expected EMB1");
  }
  unsigned char header[8];
  if (!in_.read(reinterpret_cast<char*>(header), 8)) {
    throw DataError(path_ + ": truncated header");
  }
  rows_ = std::size_t{header[0]} | (std::size_t{header[1]} << 8) |
          (std::size_t{header[2]} << 16) | (std::size_t{header[3]} << 24);
  dim_ = std::size_t{header[4]} | (std::size_t{header[5]} << 8) |
         (std::size_t{header[6]} << 16) | (std::size_t{header[7]} << 24);
}

void FileTargetSource::reset() {
  next_ = 0;
  in_.clear();
  in_.seekg(12, std::ios::beg);
  if (!in_) throw DataError(path_ + ": seek failed");
}

bool FileTargetSource::next_block(EmbeddingMatrix& block, std::size_t& start) {
  if (next_ >= rows_) return false;
  start = next_;
  const std::size_t count = std::min(block_size_, rows_ - next_);
  block = EmbeddingMatrix(count, dim_);
  const std::streamsize bytes =
      static_cast<std::streamsize>(count * dim_ * sizeof(float));
  if (!in_.read(reinterpret_cast<char*>(block.data().data()), bytes)) {
    throw DataError(path_ + ": truncated payload, header says " +
                    std::to_string(rows_) + "x" + std::to_string(dim_));
  }
  std::size_t renormalized = 0;
  for (std::size_t r = 0; r < count; ++r) {
    if (validate_row_norm(block.row(r), dim_, next_ + r, path_)) {
      ++renormalized;
    }
  }
  if (renormalized > 0) {
    std::fprintf(stderr,
                 "warning: %s: renormalized %zu row(s) that were within 1e-3 "
                 "of unit norm\n",
                 path_.c_str(), renormalized);
  }
  next_ += count;
  return true;
}

namespace {

void check_dims(const EmbeddingMatrix& queries, std::size_t target_dim) {
  if (queries.dim() != target_dim) {
    throw DataError("embedding dimension mismatch: queries have " +
                    std::to_string(queries.dim()) + ", targets have " +
                    std::to_string(target_dim));
  }
}

}  // namespace

SimilarityMatrix similarity_matrix(const EmbeddingMatrix& queries,
                                   TargetSource& targets,
                                   std::size_t dense_limit, int threads) {
  check_dims(queries, targets.dim());
  const std::size_t n_b = queries.rows();
  const std::size_t n_t = targets.size();
  if (n_t > 0 && n_b > dense_limit / n_t) {
    throw ResourceLimitError(
        "dense similarity matrix needs " + std::to_string(n_b) + " x " +
        std::to_string(n_t) + " entries, above the limit of " +
        std::to_string(dense_limit) +
        "; use the streamed top-k path (--stage2 rerank) or raise "
        "--dense-limit");
  }
  SimilarityMatrix s;
  s.rows = n_b;
  s.cols = n_t;
  s.data.resize(n_b * n_t);
  targets.reset();
  EmbeddingMatrix block;
  std::size_t start = 0;
  while (targets.next_block(block, start)) {
    parallel_for(n_b, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        const float* q = queries.row(i);
        float* out = s.data.data() + i * n_t + start;
        for (std::size_t j = 0; j < block.rows(); ++j) {
          out[j] = static_cast<float>(dot_f32(q, block.row(j), queries.dim()));
        }
      }
    });
  }
  return s;
}

SimilarityMatrix similarity_matrix(const EmbeddingMatrix& queries,
                                   const EmbeddingMatrix& targets,
                                   std::size_t dense_limit, int threads) {
  MatrixTargetSource source(targets, kDefaultBlockSize);
  return similarity_matrix(queries, source, dense_limit, threads);
}

std::vector<std::vector<Candidate>> top_k_candidates(
    const EmbeddingMatrix& queries, TargetSource& targets, std::size_t k,
    int threads) {
  if (k == 0) throw UsageError("top-k requires k >= 1");
  check_dims(queries, targets.dim());
  if (targets.size() == 0) {
    throw UsageError("top-k requires a non-empty target set");
  }
  const std::size_t n_b = queries.rows();
  const std::size_t keep = std::min(k, targets.size());
  std::vector<std::vector<Candidate>> heaps(n_b);
  for (auto& h : heaps) h.reserve(keep + 1);

  targets.reset();
  EmbeddingMatrix block;
  std::size_t start = 0;
  while (targets.next_block(block, start)) {
    parallel_for(n_b, threads, [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) {
        auto& heap = heaps[i];
        const float* q = queries.row(i);
        for (std::size_t j = 0; j < block.rows(); ++j) {
          const Candidate c{
              start + j,
              static_cast<float>(dot_f32(q, block.row(j), queries.dim()))};
          if (heap.size() < keep) {
            heap.push_back(c);
            std::push_heap(heap.begin(), heap.end(), candidate_better);
          } else if (candidate_better(c, heap.front())) {
            std::pop_heap(heap.begin(), heap.end(), candidate_better);
            heap.back() = c;
            std::push_heap(heap.begin(), heap.end(), candidate_better);
          }
        }
      }
    });
  }
  parallel_for(n_b, threads, [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      std::sort(heaps[i].begin(), heaps[i].end(), candidate_better);
    }
  });
  return heaps;
}

std::vector<Candidate> argmax_rows(const SimilarityMatrix& s) {
  if (s.cols == 0) throw UsageError("argmax requires a non-empty target set");
  std::vector<Candidate> best(s.rows);
  for (std::size_t i = 0; i < s.rows; ++i) {
    const float* row = s.data.data() + i * s.cols;
    Candidate b{0, row[0]};
    for (std::size_t j = 1; j < s.cols; ++j) {
      if (row[j] > b.score) b = Candidate{j, row[j]};
    }
    best[i] = b;
  }
  return best;
}

}  // namespace bookmatch
