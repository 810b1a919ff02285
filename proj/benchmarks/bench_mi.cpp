// benchmarks/bench_mi.cpp

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

#include <cmath>
#include <vector>

#include <benchmark/benchmark.h>

#include "spane/distortion.hpp"
#include "spane/rng.hpp"

namespace {

void BM_MutualInfo(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  spane::Rng rng(21);
  std::vector<double> a(n);
  std::vector<double> b(n);
  const double rho = 0.9;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.normal();
    const double v = rng.normal();
    a[i] = u;
    b[i] = rho * u + std::sqrt(1.0 - rho * rho) * v;
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(spane::mutual_info(a, b, 3));
  }
}

}  // namespace

BENCHMARK(BM_MutualInfo)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);
