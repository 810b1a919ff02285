// tests/test_distortion.cpp

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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include <doctest.h>

#include "oracles.hpp"
#include "spane/distortion.hpp"
#include "spane/errors.hpp"
#include "spane/feature_table.hpp"
#include "spane/rng.hpp"
#include "test_support.hpp"

using namespace spane;
using spane::test::transport_oracle;

TEST_CASE("emd matches the exact transportation optimum") {
  Rng rng(101);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.uniform_int(8);
    const std::size_t m = 1 + rng.uniform_int(8);
    std::vector<double> a(n);
    std::vector<double> b(m);
    for (double& v : a) v = rng.uniform(-5.0, 5.0);
    for (double& v : b) v = rng.uniform(-5.0, 5.0);
    const double got = emd_1d(a, b);
    const double want = transport_oracle(a, b);
    CAPTURE(trial);
    REQUIRE(std::abs(got - want) <= 1e-9);
  }
}

TEST_CASE("emd of identical multisets is exactly zero") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(1 + rng.uniform_int(50));
    for (double& v : a) v = rng.uniform(-3.0, 3.0);
    std::vector<double> shuffled = a;
    rng.shuffle(shuffled);
    CHECK(emd_1d(a, shuffled) == 0.0);
  }
}

TEST_CASE("emd translation shifts by the offset") {
  Rng rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> a(1 + rng.uniform_int(40));
    for (double& v : a) v = rng.uniform(-2.0, 2.0);
    const double delta = rng.uniform(0.0, 4.0);
    std::vector<double> b = a;
    for (double& v : b) v += delta;
    CHECK(std::abs(emd_1d(a, b) - delta) <= 1e-12);
  }
}

TEST_CASE("emd handles unequal sizes") {
  CHECK(emd_1d({0.0}, {1.0}) == doctest::Approx(1.0));
  CHECK(emd_1d({0.0, 1.0}, {1.0, 2.0}) == doctest::Approx(1.0));
  // Mass 1/2 at 0 moves to 1: cost 1/2.
  CHECK(emd_1d({0.0, 1.0}, {1.0}) == doctest::Approx(0.5));
}

TEST_CASE("emd rejects empty input") {
  CHECK_THROWS_AS(emd_1d({}, {1.0}), DataError);
  CHECK_THROWS_AS(emd_1d({1.0}, {}), DataError);
}

TEST_CASE("mutual information recovers the gaussian analytic value") {
  // MI of a bivariate gaussian is -log(1 - rho^2) / 2.
  const double rho = 0.9;
  const double want = -0.5 * std::log(1.0 - rho * rho);
  Rng rng(77);
  const std::size_t n = 2000;
  std::vector<double> x(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.normal();
    const double v = rng.normal();
    x[i] = u;
    y[i] = rho * u + std::sqrt(1.0 - rho * rho) * v;
  }
  const double got = mutual_info(x, y, 3);
  CHECK(std::abs(got - want) <= 0.10);
}

TEST_CASE("mutual information of independent pairs averages near zero") {
  double sum = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Rng rng(1000 + seed);
    const std::size_t n = 1500;
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = rng.normal();
    }
    sum += mutual_info(x, y, 3);
  }
  CHECK(std::abs(sum / 10.0) <= 0.05);
}

TEST_CASE("mutual information is bit-exactly symmetric") {
  Rng rng(9001);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 64 + rng.uniform_int(64);
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = std::floor(rng.uniform(-3.0, 3.0) * 4.0) / 4.0;  // many ties
      y[i] = x[i] * 0.5 + rng.normal();
    }
    CHECK(mutual_info(x, y, 3) == mutual_info(y, x, 3));
  }
}

TEST_CASE("mutual information saturates on identical continuous columns") {
  // The estimator ceiling for duplicated data is psi(N) - psi(k); the
  // independent tie jitter applied to a duplicated axis discounts it by at
  // most psi(k+1) - psi(k), so the estimate lands between the two.
  Rng rng(13);
  const std::size_t n = 200;
  std::vector<double> x(n);
  for (double& v : x) v = rng.normal();
  const double got = mutual_info(x, x, 3);
  const double psi_200 = 5.2958152832;
  const double psi_3 = 0.9227843351;
  const double psi_4 = 1.2561176684;
  CHECK(got >= psi_200 - psi_4 - 0.05);
  CHECK(got <= psi_200 - psi_3 + 0.05);
}

TEST_CASE("mutual information breaks ties independently on equal columns") {
  // Two-valued identical columns carry at most one bit; with per-axis tie
  // breaking the estimate stays near log(2) instead of saturating.
  Rng rng(14);
  const std::size_t n = 400;
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform_int(2) ? 1.0 : 0.0;
  const double got = mutual_info(x, x, 3);
  CHECK(got < 1.0);
  CHECK(got > 0.3);
}

TEST_CASE("mutual information matches a naive recount on tie-free data") {
  // Literal restatement of the estimator with linear-scan neighbor counts:
  // psi(k) + psi(N) - mean_i[psi(nx_i + 1) + psi(ny_i + 1)] where nx, ny
  // count marginal neighbors strictly inside the k-th joint max-norm
  // distance.  On continuous data the tie jitter is orders of magnitude
  // below any point spacing, so the counts are unaffected by it.
  auto psi = [](double v) {
    double r = 0.0;
    while (v < 6.0) {
      r -= 1.0 / v;
      v += 1.0;
    }
    const double inv = 1.0 / v;
    const double inv2 = inv * inv;
    return r + std::log(v) - 0.5 * inv -
           inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 / 252.0));
  };
  Rng rng(31337);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 80 + rng.uniform_int(60);
    const std::uint32_t k = 2 + static_cast<std::uint32_t>(rng.uniform_int(3));
    std::vector<double> x(n);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = rng.normal();
      y[i] = 0.7 * x[i] + rng.normal();
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<double> d;
      d.reserve(n - 1);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        d.push_back(std::max(std::abs(x[j] - x[i]), std::abs(y[j] - y[i])));
      }
      std::nth_element(d.begin(), d.begin() + (k - 1), d.end());
      const double eps = d[k - 1];
      std::size_t nx = 0;
      std::size_t ny = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        if (std::abs(x[j] - x[i]) < eps) ++nx;
        if (std::abs(y[j] - y[i]) < eps) ++ny;
      }
      acc += psi(static_cast<double>(nx + 1)) +
             psi(static_cast<double>(ny + 1));
    }
    const double want = psi(static_cast<double>(k)) +
                        psi(static_cast<double>(n)) -
                        acc / static_cast<double>(n);
    const double got = mutual_info(x, y, k);
    CAPTURE(trial);
    CHECK(std::abs(got - want) <= 1e-9);
  }
}

TEST_CASE("mutual information validates input") {
  CHECK_THROWS_AS(mutual_info({1.0, 2.0}, {1.0}), DataError);
  CHECK_THROWS_AS(mutual_info({1.0, 2.0, 3.0}, {1.0, 2.0, 3.0}, 3),
                  DataError);
}

TEST_CASE("standardizer centers and scales, keeping degenerate columns") {
  FeatureTable t;
  t.ids = {"a", "b", "c", "d"};
  t.columns = {"x", "flat"};
  t.values = {1.0, 5.0, 2.0, 5.0, 3.0, 5.0, 4.0, 5.0};

  const Standardizer s = fit_standardizer(t);
  REQUIRE(s.columns == t.columns);
  CHECK(s.mean[0] == doctest::Approx(2.5));
  CHECK(s.degenerate[0] == false);
  CHECK(s.degenerate[1] == true);

  const FeatureTable out = s.apply(t);
  CHECK(out.at(0, 0) == doctest::Approx(-1.3416407865));  // (1-2.5)/1.118
  // Degenerate columns shift by the mean but keep unit scale.
  CHECK(out.at(0, 1) == doctest::Approx(0.0));
}

TEST_CASE("distortion report pairs rows by id and sorts by feature") {
  FeatureTable orig;
  orig.ids = {"u1", "u2", "u3", "u4", "u5", "u6"};
  orig.columns = {"b", "a"};
  Rng rng(55);
  orig.values.resize(12);
  for (double& v : orig.values) v = rng.normal();

  FeatureTable anon = orig;
  anon.ids = {"u1", "u2", "u3", "u4", "u5", "u7"};  // u6 unmatched
  for (double& v : anon.values) v += 0.1;

  const Standardizer s = fit_standardizer(orig);
  const DistortionReport report = distortion_report(orig, anon, s);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].feature == "a");
  CHECK(report.rows[1].feature == "b");
  CHECK(report.rows[0].paired == 5);
  CHECK(report.rows[0].mi >= 0.0);
}

TEST_CASE("distortion report requires a non-empty id intersection") {
  FeatureTable orig;
  orig.ids = {"u1", "u2", "u3", "u4", "u5"};
  orig.columns = {"a"};
  orig.values = {1.0, 2.0, 3.0, 4.0, 5.0};
  FeatureTable anon = orig;
  anon.ids = {"v1", "v2", "v3", "v4", "v5"};
  const Standardizer s = fit_standardizer(orig);
  CHECK_THROWS_AS(distortion_report(orig, anon, s), DataError);
}
