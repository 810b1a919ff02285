// core/include/spane/synth.hpp

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

#ifndef SPANE_SYNTH_HPP_
#define SPANE_SYNTH_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "spane/corpus.hpp"
#include "spane/errors.hpp"

namespace spane {

struct PauseSpec {
  double onset_s = 0.0;
  double duration_s = 0.0;
};

// Brief forced-unvoiced gap, shorter than the pause threshold.
struct PitchBreakSpec {
  double onset_s = 0.0;
  double duration_s = 0.0;
};

struct UtteranceSpec {
  double f0_base_hz = 120.0;
  // Slow intonation: depth in Hz at a fixed sub-Hz rate.
  double f0_var_hz = 0.0;
  double intonation_rate_hz = 0.35;
  double intonation_phase = 0.0;
  // Tremor: faster F0 modulation, depth per speaker.
  double tremor_depth_hz = 0.0;
  double tremor_rate_hz = 5.5;
  double tremor_phase = 0.0;
  // Period perturbation as a fraction, e.g. 0.02 for 2%.
  double jitter_pct = 0.0;
  std::vector<PauseSpec> pauses;
  std::vector<PitchBreakSpec> breaks;
  double duration_s = 3.0;
  double amplitude = 0.25;
  int sample_rate = 16000;
};

void validate_spec(const UtteranceSpec& spec);

enum class PolicyKind {
  kF0Smooth,
  kEnergyGain,
  kJitterRemove,
  kPausePreserve,
  kTranscriptResynth,
};

struct DegradationPolicy {
  PolicyKind kind = PolicyKind::kPausePreserve;
  double window_s = 0.0;          // kF0Smooth
  double gain_db = 0.0;           // kEnergyGain
  double target_f0_base_hz = 0.0; // kTranscriptResynth
  double uniform_pause_s = 0.0;   // kTranscriptResynth
};

DegradationPolicy f0_smooth(double window_s);
DegradationPolicy energy_gain(double gain_db);
DegradationPolicy jitter_remove();
DegradationPolicy pause_preserve();
DegradationPolicy transcript_resynth(double target_f0_base_hz,
                                     double uniform_pause_s);

// Amplitude produced by energy_gain(0); gains are absolute levels relative
// to this reference, so equal gains map any input to equal output energy.
constexpr double kReferenceAmplitude = 0.25;

// Parameter tracks a degradation acts on: the F0 control contour on a 1 ms
// grid plus the remaining synthesis parameters.
struct RenderPlan {
  std::vector<double> f0_ms_hz;
  double jitter_pct = 0.0;
  std::vector<PauseSpec> pauses;
  std::vector<PitchBreakSpec> breaks;
  double amplitude = 0.25;
  double duration_s = 0.0;
  int sample_rate = 16000;
};

RenderPlan make_plan(const UtteranceSpec& spec);
void apply_policy(RenderPlan* plan, const DegradationPolicy& policy);
Waveform render_plan(const RenderPlan& plan, std::uint64_t seed);

Waveform synth_utterance(const UtteranceSpec& spec, std::uint64_t seed);

// Applies the policies to the parameter tracks in order, then renders with
// the same seed; an empty policy list reproduces synth_utterance exactly.
Waveform degrade(const UtteranceSpec& spec,
                 const std::vector<DegradationPolicy>& policies,
                 std::uint64_t seed);

struct ParamRange {
  double lo = 0.0;
  double hi = 0.0;
};

struct CohortGroupParams {
  ParamRange f0_base_male_hz{100.0, 140.0};
  ParamRange f0_base_female_hz{170.0, 230.0};
  // Narrow band: intonation depth is a shared speaking-style constant, not
  // a speaker trait, so slow-contour dynamics stay comparable across the
  // cohort.
  ParamRange f0_var_hz{9.0, 12.0};
  ParamRange tremor_depth_hz{3.0, 5.0};
  ParamRange jitter_pct{0.002, 0.005};
  ParamRange breaks_per_s{0.3, 0.6};
  ParamRange pause_duration_s{0.12, 0.34};
  int pause_count_min = 3;
  int pause_count_max = 5;
};

// Defaults model the control group; parkinson_defaults() raises tremor,
// jitter, break rate, and pause durations.
CohortGroupParams parkinson_defaults();

struct CohortConfig {
  int speakers_per_group = 10;
  int utterances_per_speaker = 4;
  int sample_rate = 16000;
  ParamRange duration_s{4.2, 5.5};
  ParamRange amplitude{0.15, 0.45};
  CohortGroupParams control;
  CohortGroupParams parkinson = parkinson_defaults();
  std::uint64_t seed = 0;
  // Synthetic frame matrices for the speaker-verification pipeline.
  std::uint32_t feature_dim = 16;
  double feature_hop_s = 0.02;
  // Frame scatter well inside the between-speaker spacing: neighbor
  // averaging then lands on the target voice instead of leaning back
  // toward the source.
  double feature_noise_std = 0.08;
};

struct CohortUtterance {
  UtteranceRecord record;
  UtteranceSpec spec;
  std::uint64_t synth_seed = 0;
};

// Writes wav/<id>.wav, fmat/<id>.fmat, manifest.jsonl, and specs.jsonl
// under out_dir; deterministic per cfg.seed.
std::vector<CohortUtterance> synth_cohort(const CohortConfig& cfg,
                                          const std::string& out_dir);

void write_spec_jsonl(const std::string& path,
                      const std::vector<CohortUtterance>& cohort);
std::vector<CohortUtterance> read_spec_jsonl(const std::string& path);

}  // namespace spane

#endif  // SPANE_SYNTH_HPP_
