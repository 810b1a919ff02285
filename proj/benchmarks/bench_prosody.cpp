// benchmarks/bench_prosody.cpp

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

#include <benchmark/benchmark.h>

#include "spane/prosody.hpp"
#include "spane/synth.hpp"

namespace {

void BM_Summarize(benchmark::State& state) {
  spane::UtteranceSpec spec;
  spec.f0_base_hz = 120.0;
  spec.f0_var_hz = 10.0;
  spec.tremor_depth_hz = 8.0;
  spec.jitter_pct = 0.02;
  spec.duration_s = static_cast<double>(state.range(0));
  spec.pauses = {{1.0, 0.4}};
  const spane::Waveform w = spane::synth_utterance(spec, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(spane::summarize(w));
  }
}

}  // namespace

BENCHMARK(BM_Summarize)->Arg(3)->Arg(10)->Unit(benchmark::kMillisecond);
