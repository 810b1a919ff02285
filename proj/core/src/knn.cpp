// core/src/knn.cpp

// Copyright 2026 The spane-kit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "spane/knn.hpp"

#include <cmath>
#include <cstring>

#include "spane/rng.hpp"

namespace spane {

namespace {

// Dot product with four independent accumulation lanes.  The lane split is
// part of the kernel's definition: results must not depend on optimization
// level, and the independent chains let the compiler keep the multiplies
// pipelined.
double dot_lanes(const double* a, const double* b, std::uint32_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::uint32_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += a[i] * b[i];
    s1 += a[i + 1] * b[i + 1];
    s2 += a[i + 2] * b[i + 2];
    s3 += a[i + 3] * b[i + 3];
  }
  for (; i < n; ++i) s0 += a[i] * b[i];
  return (s0 + s1) + (s2 + s3);
}

double row_norm(const float* row, std::uint32_t n) {
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  std::uint32_t i = 0;
  for (; i + 4 <= n; i += 4) {
    s0 += double(row[i]) * row[i];
    s1 += double(row[i + 1]) * row[i + 1];
    s2 += double(row[i + 2]) * row[i + 2];
    s3 += double(row[i + 3]) * row[i + 3];
  }
  for (; i < n; ++i) s0 += double(row[i]) * row[i];
  return std::sqrt((s0 + s1) + (s2 + s3));
}

// Running top-k ordered by (similarity desc, pool index asc).  Candidates
// arrive in increasing pool index, so a candidate displaces the current
// worst entry only on strictly greater similarity.
struct TopK {
  std::uint32_t k = 0;
  std::uint32_t count = 0;
  double sim[64];
  std::uint32_t idx[64];

  void offer(double s, std::uint32_t j) {
    if (count < k) {
      sim[count] = s;
      idx[count] = j;
      ++count;
      return;
    }
    std::uint32_t worst = 0;
    for (std::uint32_t i = 1; i < k; ++i) {
      if (sim[i] < sim[worst] ||
          (sim[i] == sim[worst] && idx[i] > idx[worst])) {
        worst = i;
      }
    }
    if (s > sim[worst]) {
      sim[worst] = s;
      idx[worst] = j;
    }
  }

  // Entries in rank order.
  void sorted(std::vector<std::uint32_t>& out) const {
    out.assign(idx, idx + count);
    std::vector<double> s(sim, sim + count);
    for (std::uint32_t i = 1; i < count; ++i) {
      double cs = s[i];
      std::uint32_t ci = out[i];
      std::uint32_t j = i;
      while (j > 0 &&
             (s[j - 1] < cs || (s[j - 1] == cs && out[j - 1] > ci))) {
        s[j] = s[j - 1];
        out[j] = out[j - 1];
        --j;
      }
      s[j] = cs;
      out[j] = ci;
    }
  }
};

constexpr std::uint32_t kQueryBlock = 32;
constexpr std::uint32_t kMaxK = 64;

}  // namespace

TargetPool build_pool(const std::vector<const FrameMatrix*>& targets) {
  if (targets.empty()) throw DataError("pool: no target matrices");
  TargetPool pool;
  pool.dim = targets.front()->dim;
  std::size_t total = 0;
  for (const FrameMatrix* m : targets) {
    if (m->dim != pool.dim) {
      throw DataError("pool: dimension mismatch (" + std::to_string(m->dim) +
                      " vs " + std::to_string(pool.dim) + ")");
    }
    total += m->frames;
  }
  pool.rows.reserve(total * pool.dim);
  pool.unit_rows.reserve(total * pool.dim);
  pool.norms.reserve(total);
  for (const FrameMatrix* m : targets) {
    for (std::uint32_t t = 0; t < m->frames; ++t) {
      const float* row = m->row(t);
      double norm = row_norm(row, pool.dim);
      if (norm < kZeroNormThreshold) {
        ++pool.dropped_zero_rows;
        continue;
      }
      pool.rows.insert(pool.rows.end(), row, row + pool.dim);
      for (std::uint32_t d = 0; d < pool.dim; ++d) {
        pool.unit_rows.push_back(double(row[d]) / norm);
      }
      pool.norms.push_back(norm);
    }
  }
  pool.size = pool.norms.size();
  if (pool.size == 0) {
    throw DataError("pool: all target rows have zero norm");
  }
  return pool;
}

TargetPool build_pool(const std::vector<FrameMatrix>& targets) {
  std::vector<const FrameMatrix*> ptrs;
  ptrs.reserve(targets.size());
  for (const auto& m : targets) ptrs.push_back(&m);
  return build_pool(ptrs);
}

ConversionResult convert(const FrameMatrix& src, const TargetPool& pool,
                         std::uint32_t k) {
  if (src.dim != pool.dim) {
    throw DataError("convert: dimension mismatch (source " +
                    std::to_string(src.dim) + ", pool " +
                    std::to_string(pool.dim) + ")");
  }
  if (k < 1 || k > pool.size) {
    throw DataError("convert: k must be in [1, pool size]; got k=" +
                    std::to_string(k) + " with pool size " +
                    std::to_string(pool.size));
  }
  if (k > kMaxK) {
    throw DataError("convert: k larger than supported maximum " +
                    std::to_string(kMaxK));
  }

  const std::uint32_t dim = src.dim;
  ConversionResult result;
  result.output.frames = src.frames;
  result.output.dim = dim;
  result.output.hop_s = src.hop_s;
  result.output.data.resize(src.data.size());
  result.neighbors.resize(src.frames);

  // Unit-normalized queries; zero-norm frames are marked and pass through
  // unchanged.
  std::vector<double> unit_queries(std::size_t(src.frames) * dim);
  std::vector<char> is_zero(src.frames, 0);
  for (std::uint32_t t = 0; t < src.frames; ++t) {
    const float* row = src.row(t);
    double norm = row_norm(row, dim);
    if (norm < kZeroNormThreshold) {
      is_zero[t] = 1;
      ++result.zero_rows;
      std::memcpy(result.output.row(t), row, dim * sizeof(float));
      continue;
    }
    double* q = unit_queries.data() + std::size_t(t) * dim;
    for (std::uint32_t d = 0; d < dim; ++d) q[d] = double(row[d]) / norm;
  }

  std::vector<TopK> tops(kQueryBlock);
  std::vector<std::uint32_t> block_queries;
  block_queries.reserve(kQueryBlock);

  for (std::uint32_t t0 = 0; t0 < src.frames; t0 += kQueryBlock) {
    const std::uint32_t t1 =
        std::min<std::uint32_t>(t0 + kQueryBlock, src.frames);
    block_queries.clear();
    for (std::uint32_t t = t0; t < t1; ++t) {
      if (!is_zero[t]) block_queries.push_back(t);
    }
    if (block_queries.empty()) continue;
    for (std::size_t q = 0; q < block_queries.size(); ++q) {
      tops[q].k = k;
      tops[q].count = 0;
    }
    // Pool rows stream once per query block; the per-row working set of
    // queries stays cache-resident.
    for (std::size_t j = 0; j < pool.size; ++j) {
      const double* prow = pool.unit_rows.data() + j * dim;
      for (std::size_t q = 0; q < block_queries.size(); ++q) {
        const double* qrow =
            unit_queries.data() + std::size_t(block_queries[q]) * dim;
        double sim = dot_lanes(prow, qrow, dim);
        tops[q].offer(sim, static_cast<std::uint32_t>(j));
      }
    }
    std::vector<double> acc(dim);
    for (std::size_t q = 0; q < block_queries.size(); ++q) {
      const std::uint32_t t = block_queries[q];
      tops[q].sorted(result.neighbors[t]);
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::uint32_t j : result.neighbors[t]) {
        const float* prow = pool.rows.data() + std::size_t(j) * dim;
        for (std::uint32_t d = 0; d < dim; ++d) acc[d] += prow[d];
      }
      float* out = result.output.row(t);
      for (std::uint32_t d = 0; d < dim; ++d) {
        out[d] = static_cast<float>(acc[d] / k);
      }
    }
  }
  return result;
}

FrameMatrix resynthesis_passthrough(const FrameMatrix& src) {
  return src;
}

TargetPolicy parse_target_policy(const std::string& s,
                                 const std::string& context) {
  if (s == "same_gender") return TargetPolicy::kSameGender;
  if (s == "cross_gender") return TargetPolicy::kCrossGender;
  if (s == "unconstrained") return TargetPolicy::kUnconstrained;
  throw ConfigError(context + ": unknown target policy '" + s + "'");
}

const char* to_string(TargetPolicy p) {
  switch (p) {
    case TargetPolicy::kSameGender:
      return "same_gender";
    case TargetPolicy::kCrossGender:
      return "cross_gender";
    default:
      return "unconstrained";
  }
}

std::vector<TargetSpeaker> list_target_speakers(
    const std::vector<UtteranceRecord>& records) {
  std::vector<TargetSpeaker> speakers;
  for (const auto& rec : records) {
    bool seen = false;
    for (const auto& s : speakers) {
      if (s.speaker == rec.speaker) {
        seen = true;
        break;
      }
    }
    if (!seen) speakers.push_back({rec.speaker, rec.gender});
  }
  return speakers;
}

std::string select_target(const std::vector<TargetSpeaker>& candidates,
                          const UtteranceRecord& source, TargetPolicy policy,
                          std::uint64_t seed) {
  std::vector<const TargetSpeaker*> admitted;
  for (const auto& c : candidates) {
    bool match = true;
    if (policy == TargetPolicy::kSameGender) {
      match = c.gender == source.gender;
    } else if (policy == TargetPolicy::kCrossGender) {
      match = c.gender != source.gender;
    }
    if (match) admitted.push_back(&c);
  }
  if (admitted.empty()) {
    throw DataError("select_target: no candidate speaker admitted by policy " +
                    std::string(to_string(policy)) + " for utterance '" +
                    source.id + "'");
  }
  Rng rng(derived_seed(seed, source.id));
  return admitted[rng.uniform_int(admitted.size())]->speaker;
}

}  // namespace spane
