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
#include "bookmatch/embed.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>

#include "bookmatch/text.hpp"
#include "bookmatch/util.hpp"

namespace bookmatch {

namespace {

constexpr std::uint64_t kFnvOffset = 14695981039346656037ULL;
constexpr std::uint64_t kFnvPrime = 1099511628211ULL;

inline std::uint64_t fnv1a_update(std::uint64_t h, const char* bytes, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    h ^= static_cast<unsigned char>(bytes[i]);
    h *= kFnvPrime;
  }
  return h;
}

void encode_utf8(char32_t cp, std::string& out) {
  char32_t s[1] = {cp};
  out += utf32_to_utf8(std::u32string_view(s, 1));
}

void default_warn(const std::string& msg) { std::fprintf(stderr, "warning: %s\n", msg.c_str()); }

void put_u32_le(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
               static_cast<char>((v >> 16) & 0xFF), static_cast<char>((v >> 24) & 0xFF)};
  out.write(b, 4);
}

bool get_u32_le(std::istream& in, std::uint32_t& v) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) return false;
  v = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
      (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  return true;
}

}  // namespace

void EmbedConfig::validate() const {
  if (dim < 8) throw UsageError("embedding dim must be >= 8");
  if (ngram_sizes.empty()) throw UsageError("ngram_sizes must be non-empty");
  for (int n : ngram_sizes) {
    if (n < 1) throw UsageError("every n-gram size must be >= 1");
  }
}

void embed_text(std::string_view normalized_text, const EmbedConfig& cfg, float* out) {
  std::fill(out, out + cfg.dim, 0.0f);
  if (normalized_text.empty()) return;

  std::u32string padded;
  padded.reserve(normalized_text.size() + 2);
  padded.push_back(U' ');
  padded += utf8_to_utf32(normalized_text);
  padded.push_back(U' ');

  // UTF-8 re-encoding of each padded character, with running byte offsets so
  // an n-gram's bytes form one contiguous slice.
  std::string bytes;
  std::vector<std::size_t> offsets;
  offsets.reserve(padded.size() + 1);
  for (char32_t cp : padded) {
    offsets.push_back(bytes.size());
    encode_utf8(cp, bytes);
  }
  offsets.push_back(bytes.size());

  // Duplicate sizes must not double-count: ngram_sizes is a set.
  std::set<int> sizes(cfg.ngram_sizes.begin(), cfg.ngram_sizes.end());
  const std::uint64_t basis = kFnvOffset ^ cfg.seed;
  for (int n : sizes) {
    if (static_cast<std::size_t>(n) > padded.size()) continue;
    for (std::size_t start = 0; start + n <= padded.size(); ++start) {
      const std::size_t b0 = offsets[start];
      const std::size_t b1 = offsets[start + n];
      const std::uint64_t h = fnv1a_update(basis, bytes.data() + b0, b1 - b0);
      out[h % cfg.dim] += 1.0f;
    }
  }

  double sumsq = 0.0;
  for (std::uint32_t d = 0; d < cfg.dim; ++d) sumsq += double(out[d]) * double(out[d]);
  if (sumsq > 0.0) {
    const double inv = 1.0 / std::sqrt(sumsq);
    for (std::uint32_t d = 0; d < cfg.dim; ++d) {
      out[d] = static_cast<float>(double(out[d]) * inv);
    }
  }
}

std::vector<float> embed_text(std::string_view normalized_text, const EmbedConfig& cfg) {
  cfg.validate();
  std::vector<float> out(cfg.dim);
  embed_text(normalized_text, cfg, out.data());
  return out;
}

EmbeddingMatrix embed_batch(const std::vector<std::string>& texts, const EmbedConfig& cfg,
                            int threads) {
  cfg.validate();
  EmbeddingMatrix m(texts.size(), cfg.dim);
  parallel_for(texts.size(), threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      embed_text(texts[i], cfg, m.row(i));
    }
  });
  return m;
}

void write_embeddings(const EmbeddingMatrix& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out.write("EMB1", 4);
  put_u32_le(out, static_cast<std::uint32_t>(m.rows()));
  put_u32_le(out, static_cast<std::uint32_t>(m.dim()));
  static_assert(sizeof(float) == 4);
  // Little-endian hosts write the raw buffer; this is the only layout shipped.
  out.write(reinterpret_cast<const char*>(m.data().data()),
            static_cast<std::streamsize>(m.data().size() * sizeof(float)));
  out.flush();
  if (!out) throw DataError("write failed for " + path);
}

EmbeddingMatrix read_embeddings(const std::string& path,
                                const std::function<void(const std::string&)>& warn) {
  const auto emit = warn ? warn : default_warn;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path);
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "EMB1", 4) != 0) {
    throw DataError(path + ": bad magic, expected EMB1");
  }
  std::uint32_t rows = 0, dim = 0;
  if (!get_u32_le(in, rows) || !get_u32_le(in, dim)) {
    throw DataError(path + ": truncated header");
  }
  EmbeddingMatrix m(rows, dim);
  const std::streamsize payload = static_cast<std::streamsize>(m.data().size() * sizeof(float));
  if (!in.read(reinterpret_cast<char*>(m.data().data()), payload)) {
    throw DataError(path + ": truncated payload, header says " + std::to_string(rows) + "x" +
                    std::to_string(dim));
  }
  char extra;
  if (in.read(&extra, 1)) {
    throw DataError(path + ": payload longer than header " + std::to_string(rows) + "x" +
                    std::to_string(dim));
  }

  std::size_t renormalized = 0;
  for (std::uint32_t i = 0; i < rows; ++i) {
    if (validate_row_norm(m.row(i), dim, i, path)) ++renormalized;
  }
  if (renormalized > 0) {
    emit(path + ": renormalized " + std::to_string(renormalized) +
         " row(s) that were within 1e-3 of unit norm");
  }
  return m;
}

bool validate_row_norm(float* row, std::size_t dim, std::size_t row_index,
                       const std::string& context) {
  double sumsq = 0.0;
  for (std::size_t d = 0; d < dim; ++d) sumsq += double(row[d]) * double(row[d]);
  if (sumsq == 0.0) return false;
  const double norm = std::sqrt(sumsq);
  if (std::abs(norm - 1.0) <= 1e-6) return false;
  if (std::abs(norm - 1.0) <= 1e-3) {
    const double inv = 1.0 / norm;
    for (std::size_t d = 0; d < dim; ++d) row[d] = static_cast<float>(double(row[d]) * inv);
    return true;
  }
  throw DataError(context + ": row " + std::to_string(row_index) + " has norm " +
                  std::to_string(norm) + ", not unit or zero");
}

}  // namespace bookmatch
