// benchmarks/bench_knn.cpp

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

#include <cstdint>

#include <benchmark/benchmark.h>

#include "spane/knn.hpp"
#include "spane/rng.hpp"

namespace {

spane::FrameMatrix random_matrix(std::uint32_t frames, std::uint32_t dim,
                                 std::uint64_t seed) {
  spane::FrameMatrix m;
  m.frames = frames;
  m.dim = dim;
  m.hop_s = 0.02f;
  m.data.resize(static_cast<std::size_t>(frames) * dim);
  spane::Rng rng(seed);
  for (float& v : m.data) v = static_cast<float>(rng.normal());
  return m;
}

void BM_Convert(benchmark::State& state) {
  const auto pool_frames = static_cast<std::uint32_t>(state.range(0));
  const spane::FrameMatrix src = random_matrix(3000, 64, 1);
  std::vector<spane::FrameMatrix> targets;
  targets.push_back(random_matrix(pool_frames, 64, 2));
  const spane::TargetPool pool = spane::build_pool(targets);
  for (auto _ : state) {
    benchmark::DoNotOptimize(spane::convert(src, pool, 4));
  }
  state.SetItemsProcessed(state.iterations() * src.frames);
}

}  // namespace

BENCHMARK(BM_Convert)
    ->Arg(8000)
    ->Arg(80000)
    ->Unit(benchmark::kMillisecond);
