// core/include/spane/prosody.hpp

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

#ifndef SPANE_PROSODY_HPP_
#define SPANE_PROSODY_HPP_

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "spane/corpus.hpp"
#include "spane/errors.hpp"

namespace spane {

struct F0Track {
  std::vector<double> f0;    // Hz, 0 where unvoiced
  std::vector<bool> voiced;  // f0 > 0 iff voiced
  double frame_s = 0.04;
  double hop_s = 0.01;
};

struct PitchConfig {
  double frame_s = 0.04;
  double hop_s = 0.01;
  double fmin = 60.0;
  double fmax = 400.0;
  // Cumulative-mean-normalized difference threshold for voicing.
  double threshold = 0.15;
};

// Difference-function pitch tracker with cumulative-mean normalization and
// parabolic dip interpolation.  Frames below the energy floor or without a
// normalized dip under the threshold are unvoiced.
F0Track f0_track(const Waveform& w, const PitchConfig& cfg = {});

// Per-frame 10*log10(mean square + 1e-10); silence reads -100 dB.
std::vector<double> energy_track(const Waveform& w, double frame_s = 0.04,
                                 double hop_s = 0.01);

constexpr double kEnergyFloorDb = -100.0;
// Frames below this absolute level never count as speech.
constexpr double kAbsoluteSpeechGateDb = -90.0;
// Relative silence floor: median energy of gated frames minus this.
constexpr double kSilenceFloorDropDb = 25.0;

struct PauseInterval {
  std::size_t begin = 0;  // frame index, inclusive
  std::size_t end = 0;    // frame index, exclusive
  double duration_s = 0.0;
};

struct PauseSegmentation {
  std::vector<PauseInterval> pauses;
  // Speech region [begin, end) spanning first to last non-silent frame.
  std::size_t speech_begin = 0;
  std::size_t speech_end = 0;
  bool no_speech = false;
  double silence_floor_db = kEnergyFloorDb;
  std::vector<bool> silent;  // per frame
};

// Pauses are maximal runs of silent frames (below the relative floor and
// unvoiced) inside the speech region lasting at least min_pause_s; a run
// of L frames lasts (L - 1) * hop_s + frame_s seconds.
PauseSegmentation segment_pauses(const std::vector<double>& energy_db,
                                 const std::vector<bool>& voiced,
                                 double frame_s, double hop_s,
                                 double min_pause_s = 0.1);

struct JitterStats {
  double avg = 0.0;
  double std = 0.0;
  // False when fewer than two consecutive periods exist.
  bool defined = false;
};

// Period-perturbation jitter over maximal voiced runs of the coarse track:
// per-frame periods 1/f0, samples |T_i - T_{i-1}| / mean(T).
JitterStats jitter_stats(const F0Track& track);

// Pitch-synchronous period sequences, one per voiced run, found by marching
// pulse peaks at the local period predicted by the track.  The coarse track
// averages odd-even period alternation away; this path preserves it.
std::vector<std::vector<double>> period_runs(const Waveform& w,
                                             const F0Track& track);

JitterStats jitter_from_periods(const std::vector<std::vector<double>>& runs);

struct AcousticSummary {
  double f0_avg = 0.0;
  double f0_std = 0.0;
  double f0_deriv_avg = 0.0;
  double energy_avg = 0.0;
  double energy_std = 0.0;
  double pause_dur_avg = 0.0;
  double pause_dur_std = 0.0;
  double pause_count = 0.0;
  double unvoiced_ratio = 0.0;
  double jitter_avg = 0.0;
  double jitter_std = 0.0;
  bool no_voicing = false;
  bool no_speech = false;
};

inline constexpr const char* kSummaryFeatureNames[] = {
    "f0_avg",        "f0_std",        "f0_deriv_avg", "energy_avg",
    "energy_std",    "pause_dur_avg", "pause_dur_std", "pause_count",
    "unvoiced_ratio", "jitter_avg",   "jitter_std",
};
inline constexpr std::size_t kSummaryFeatureCount = 11;

std::vector<double> summary_values(const AcousticSummary& s);

struct SummaryConfig {
  PitchConfig pitch;
  double min_pause_s = 0.1;
};

AcousticSummary summarize(const Waveform& w, const SummaryConfig& cfg = {});

// CSV with header id, the 11 feature names, then a flags column holding a
// semicolon-joined list (empty when clean).
void write_summary_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, AcousticSummary>>& rows);

}  // namespace spane

#endif  // SPANE_PROSODY_HPP_
