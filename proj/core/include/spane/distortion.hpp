// core/include/spane/distortion.hpp

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

// Per-feature distortion analysis between an original and an anonymized
// feature table: how far each feature's distribution moved (1-D earth
// mover's distance on standardized values) and how much per-utterance
// information survived (Kraskov-style mutual information on pairs matched
// by id).

#ifndef SPANE_DISTORTION_HPP_
#define SPANE_DISTORTION_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "spane/feature_table.hpp"

namespace spane {

// Per-column affine transform fitted on the original data (population
// statistics).  Columns whose standard deviation is below
// kDegenerateStdThreshold are flagged and transformed with std 1.
struct Standardizer {
  std::vector<std::string> columns;
  std::vector<double> mean;
  std::vector<double> stddev;       // as fitted
  std::vector<bool> degenerate;     // stddev below threshold

  // (x - mean) / max(stddev, degenerate -> 1), matching columns by name.
  // Missing columns in |table| are an error naming the column.
  FeatureTable apply(const FeatureTable& table) const;
};

inline constexpr double kDegenerateStdThreshold = 1e-12;

// Fits per-column mean and population standard deviation.  Requires at
// least two rows.
Standardizer fit_standardizer(const FeatureTable& table);

// Exact first Wasserstein distance between the empirical distributions of
// two samples (equal weights within each sample, sizes may differ),
// computed by integrating |F_a - F_b| over the merged support.
double emd_1d(const std::vector<double>& a, const std::vector<double>& b);

// Mutual information in nats between paired samples, Kraskov estimator 1
// with k neighbors under the max norm.  Ties are broken by adding jitter of
// 1e-10 times the axis standard deviation, seeded from a content hash of
// the axis so that mutual_info(a, b) == mutual_info(b, a) bit-exactly.
// The raw estimate may be slightly negative; reports clamp at zero.
double mutual_info(const std::vector<double>& a, const std::vector<double>& b,
                   std::uint32_t k = 3);

struct DistortionRow {
  std::string feature;
  double emd = 0.0;
  double mi = 0.0;           // clamped at 0
  std::size_t paired = 0;    // utterances matched by id for MI
};

struct DistortionReport {
  std::vector<DistortionRow> rows;  // sorted by feature name
};

// Standardizes both tables with |standardizer| (fitted on the original),
// then computes per-feature EMD over all rows of each side and MI over the
// id intersection.  The intersection must be non-empty.
DistortionReport distortion_report(const FeatureTable& original,
                                   const FeatureTable& anonymized,
                                   const Standardizer& standardizer,
                                   std::uint32_t mi_k = 3);

// CSV with header feature,emd,mi,n.
void write_distortion_csv(const std::string& path,
                          const DistortionReport& report);

}  // namespace spane

#endif  // SPANE_DISTORTION_HPP_
