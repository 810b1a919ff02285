// core/include/spane/knn.hpp

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

// Feature-space voice conversion: every source frame is replaced by the
// mean of its k nearest frames in a target speaker's pool under cosine
// similarity.  The search is exact (blocked brute force); similarities and
// accumulation run in double precision so orderings near ties are
// deterministic.

#ifndef SPANE_KNN_HPP_
#define SPANE_KNN_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "spane/corpus.hpp"

namespace spane {

// Concatenated target frames with cached Euclidean norms and pre-normalized
// rows for the cosine search.  Rows with norm below kZeroNormThreshold are
// dropped at build time and counted.
struct TargetPool {
  std::uint32_t dim = 0;
  std::size_t size = 0;
  std::vector<float> rows;        // size * dim, original values
  std::vector<double> unit_rows;  // size * dim, rows scaled to unit norm
  std::vector<double> norms;      // size
  std::size_t dropped_zero_rows = 0;
};

inline constexpr double kZeroNormThreshold = 1e-12;

// Builds a pool from one or more feature matrices, concatenated in input
// order.  All matrices must share the same dimension; the pool must end up
// non-empty.
TargetPool build_pool(const std::vector<const FrameMatrix*>& targets);
TargetPool build_pool(const std::vector<FrameMatrix>& targets);

// Conversion output.  neighbors[t] holds the selected pool row indices for
// source frame t, best match first (ties broken toward lower pool index);
// it is empty for zero-norm source frames, which pass through unchanged.
struct ConversionResult {
  FrameMatrix output;
  std::vector<std::vector<std::uint32_t>> neighbors;
  std::size_t zero_rows = 0;
};

// Replaces each source frame with the arithmetic mean of its k nearest
// pool frames by cosine similarity.  Requires 1 <= k <= pool.size and
// matching dimensions.  Output keeps the source frame count and hop.
ConversionResult convert(const FrameMatrix& src, const TargetPool& pool,
                         std::uint32_t k);

// Ablation arm that skips conversion entirely: the output equals the input.
FrameMatrix resynthesis_passthrough(const FrameMatrix& src);

enum class TargetPolicy { kSameGender, kCrossGender, kUnconstrained };

TargetPolicy parse_target_policy(const std::string& s,
                                 const std::string& context);
const char* to_string(TargetPolicy p);

struct TargetSpeaker {
  std::string speaker;
  Gender gender = Gender::kMale;
};

// Unique speakers of a target manifest in first-appearance order.
std::vector<TargetSpeaker> list_target_speakers(
    const std::vector<UtteranceRecord>& records);

// Picks the target speaker for one source utterance: a uniform choice among
// the candidates admitted by the policy, deterministic given (seed,
// source.id) and independent of processing order.
std::string select_target(const std::vector<TargetSpeaker>& candidates,
                          const UtteranceRecord& source, TargetPolicy policy,
                          std::uint64_t seed);

}  // namespace spane

#endif  // SPANE_KNN_HPP_
