// core/src/distortion.cpp

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

#include "spane/distortion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "spane/csv.hpp"
#include "spane/rng.hpp"

namespace spane {

Standardizer fit_standardizer(const FeatureTable& table) {
  if (table.rows() < 2) {
    throw DataError("standardizer: need at least two rows, got " +
                    std::to_string(table.rows()));
  }
  Standardizer s;
  s.columns = table.columns;
  const std::size_t n = table.rows();
  for (std::size_t c = 0; c < table.cols(); ++c) {
    double sum = 0.0;
    for (std::size_t r = 0; r < n; ++r) sum += table.at(r, c);
    const double mean = sum / n;
    double sq = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
      const double d = table.at(r, c) - mean;
      sq += d * d;
    }
    const double stddev = std::sqrt(sq / n);
    s.mean.push_back(mean);
    s.stddev.push_back(stddev);
    s.degenerate.push_back(stddev < kDegenerateStdThreshold);
  }
  return s;
}

FeatureTable Standardizer::apply(const FeatureTable& table) const {
  FeatureTable out;
  out.ids = table.ids;
  out.columns = columns;
  out.values.resize(table.rows() * columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const std::size_t src = table.column_index(columns[c]);
    const double scale = degenerate[c] ? 1.0 : stddev[c];
    for (std::size_t r = 0; r < table.rows(); ++r) {
      out.values[r * columns.size() + c] =
          (table.at(r, src) - mean[c]) / scale;
    }
  }
  return out;
}

double emd_1d(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.empty() || b.empty()) {
    throw DataError("emd: empty sample");
  }
  std::vector<double> sa = a;
  std::vector<double> sb = b;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());

  const double na = static_cast<double>(sa.size());
  const double nb = static_cast<double>(sb.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double total = 0.0;
  double prev = 0.0;
  bool have_prev = false;
  // Integrate |F_a - F_b| between consecutive breakpoints of the merged
  // piecewise-constant CDFs.
  while (i < sa.size() || j < sb.size()) {
    double v;
    if (i < sa.size() && (j == sb.size() || sa[i] <= sb[j])) {
      v = sa[i];
    } else {
      v = sb[j];
    }
    if (have_prev) {
      const double fa = static_cast<double>(i) / na;
      const double fb = static_cast<double>(j) / nb;
      total += std::abs(fa - fb) * (v - prev);
    }
    while (i < sa.size() && sa[i] == v) ++i;
    while (j < sb.size() && sb[j] == v) ++j;
    prev = v;
    have_prev = true;
  }
  return total;
}

namespace {

double digamma(double x) {
  double result = 0.0;
  while (x < 6.0) {
    result -= 1.0 / x;
    x += 1.0;
  }
  const double inv = 1.0 / x;
  const double inv2 = inv * inv;
  result += std::log(x) - 0.5 * inv -
            inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
  return result;
}

// Axis values plus deterministic tie-breaking jitter.  The jitter stream is
// keyed by the axis content alone, so either argument order of mutual_info
// sees identical jittered axes.  |salt| separates the streams of the two
// axes when their contents are byte-identical; tie clusters must be broken
// independently per axis or equal columns read as perfectly dependent even
// where the tie order carries no information.  Symmetry is unaffected:
// swapping identical arguments is the identity.
std::vector<double> jittered_axis(const std::vector<double>& v,
                                  std::uint64_t salt) {
  const std::size_t n = v.size();
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / n;
  double sq = 0.0;
  for (double x : v) {
    const double d = x - mean;
    sq += d * d;
  }
  double scale = std::sqrt(sq / n);
  if (scale <= 0.0) scale = std::max(1.0, std::abs(mean));
  scale *= 1e-10;

  Rng rng(fnv1a64(v.data(), n * sizeof(double)) ^ n ^ salt);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = v[i] + rng.uniform(-1.0, 1.0) * scale;
  }
  return out;
}

// Count of values v in |sorted| with |v - center| < radius, excluding one
// occurrence of the center itself.  Boundary decisions evaluate the same
// subtraction a direct comparison would; forming center - radius or
// center + radius first can round the radius-defining neighbor into the
// window, and that neighbor must stay outside.
std::size_t strict_window_count(const std::vector<double>& sorted,
                                double center, double radius) {
  auto lo = std::partition_point(
      sorted.begin(), sorted.end(),
      [&](double v) { return v < center && !(center - v < radius); });
  auto hi = std::partition_point(lo, sorted.end(), [&](double v) {
    return !(v > center) || v - center < radius;
  });
  return static_cast<std::size_t>(hi - lo) - 1;
}

}  // namespace

double mutual_info(const std::vector<double>& a, const std::vector<double>& b,
                   std::uint32_t k) {
  if (a.size() != b.size()) {
    throw DataError("mutual information: length mismatch (" +
                    std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  const std::size_t n = a.size();
  if (k < 1) throw DataError("mutual information: k must be at least 1");
  if (n < k + 2) {
    throw DataError("mutual information: need at least k+2 samples, got " +
                    std::to_string(n));
  }

  const std::uint64_t ha = fnv1a64(a.data(), n * sizeof(double));
  const std::uint64_t hb = fnv1a64(b.data(), n * sizeof(double));
  const std::uint64_t second_salt = ha == hb ? 0x9E3779B97F4A7C15ull : 0;
  const std::vector<double> x = jittered_axis(a, 0);
  const std::vector<double> y = jittered_axis(b, second_salt);

  std::vector<double> sx = x;
  std::vector<double> sy = y;
  std::sort(sx.begin(), sx.end());
  std::sort(sy.begin(), sy.end());

  // For each point, the max-norm distance to its k-th nearest neighbor in
  // the joint space; then strict marginal neighbor counts inside that
  // radius.
  std::vector<double> kth(n);
  std::vector<double> best(k);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t filled = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const double d =
          std::max(std::abs(x[j] - x[i]), std::abs(y[j] - y[i]));
      if (filled < k) {
        best[filled++] = d;
        if (filled == k) std::make_heap(best.begin(), best.end());
      } else if (d < best.front()) {
        std::pop_heap(best.begin(), best.end());
        best.back() = d;
        std::push_heap(best.begin(), best.end());
      }
    }
    kth[i] = best.front();
  }

  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t nx = strict_window_count(sx, x[i], kth[i]);
    const std::size_t ny = strict_window_count(sy, y[i], kth[i]);
    acc += digamma(static_cast<double>(nx + 1)) +
           digamma(static_cast<double>(ny + 1));
  }
  return digamma(static_cast<double>(k)) + digamma(static_cast<double>(n)) -
         acc / static_cast<double>(n);
}

DistortionReport distortion_report(const FeatureTable& original,
                                   const FeatureTable& anonymized,
                                   const Standardizer& standardizer,
                                   std::uint32_t mi_k) {
  const FeatureTable zo = standardizer.apply(original);
  const FeatureTable za = standardizer.apply(anonymized);

  // Pair rows by utterance id for the dependence estimate.
  std::unordered_map<std::string, std::size_t> anon_row;
  for (std::size_t r = 0; r < za.rows(); ++r) anon_row[za.ids[r]] = r;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t r = 0; r < zo.rows(); ++r) {
    auto it = anon_row.find(zo.ids[r]);
    if (it != anon_row.end()) pairs.emplace_back(r, it->second);
  }
  if (pairs.empty()) {
    throw DataError("distortion: no utterance ids shared between the "
                    "original and anonymized tables");
  }

  DistortionReport report;
  for (std::size_t c = 0; c < standardizer.columns.size(); ++c) {
    DistortionRow row;
    row.feature = standardizer.columns[c];
    row.emd = emd_1d(zo.column(c), za.column(c));
    std::vector<double> po(pairs.size());
    std::vector<double> pa(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      po[i] = zo.at(pairs[i].first, c);
      pa[i] = za.at(pairs[i].second, c);
    }
    row.mi = std::max(0.0, mutual_info(po, pa, mi_k));
    row.paired = pairs.size();
    report.rows.push_back(std::move(row));
  }
  std::sort(report.rows.begin(), report.rows.end(),
            [](const DistortionRow& a, const DistortionRow& b) {
              return a.feature < b.feature;
            });
  return report;
}

void write_distortion_csv(const std::string& path,
                          const DistortionReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("distortion: cannot open " + path);
  out << "feature,emd,mi,n\n";
  for (const auto& row : report.rows) {
    out << csv::join_row({row.feature, csv::format_double(row.emd),
                          csv::format_double(row.mi),
                          std::to_string(row.paired)});
  }
  if (!out) throw DataError("distortion: write failed for " + path);
}

}  // namespace spane
