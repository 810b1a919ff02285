// benchmarks/bench_emd.cpp

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

#include <vector>

#include <benchmark/benchmark.h>

#include "spane/distortion.hpp"
#include "spane/rng.hpp"

namespace {

std::vector<double> random_sample(std::size_t n, std::uint64_t seed) {
  spane::Rng rng(seed);
  std::vector<double> out(n);
  for (double& v : out) v = rng.normal();
  return out;
}

void BM_Emd1d(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<double> a = random_sample(n, 11);
  const std::vector<double> b = random_sample(n, 12);
  for (auto _ : state) {
    benchmark::DoNotOptimize(spane::emd_1d(a, b));
  }
}

}  // namespace

BENCHMARK(BM_Emd1d)->Arg(1000)->Arg(10000)->Unit(benchmark::kMicrosecond);
