// tests/test_prosody.cpp

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
#include <string>
#include <vector>

#include <doctest.h>

#include "spane/errors.hpp"
#include "spane/prosody.hpp"
#include "test_support.hpp"

using namespace spane;

namespace {

constexpr int kRate = 16000;
constexpr double kPi = 3.14159265358979323846;

Waveform sine(double freq_hz, double duration_s, double amplitude = 0.3) {
  Waveform w;
  w.sample_rate = kRate;
  const std::size_t n = static_cast<std::size_t>(duration_s * kRate);
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    w.samples[i] = static_cast<float>(
        amplitude * std::sin(2.0 * kPi * freq_hz * i / kRate));
  }
  return w;
}

Waveform concat(const std::vector<Waveform>& parts) {
  Waveform w;
  w.sample_rate = kRate;
  for (const auto& p : parts) {
    w.samples.insert(w.samples.end(), p.samples.begin(), p.samples.end());
  }
  return w;
}

Waveform silence(double duration_s) {
  Waveform w;
  w.sample_rate = kRate;
  w.samples.assign(static_cast<std::size_t>(duration_s * kRate), 0.0f);
  return w;
}

double median_voiced_f0(const F0Track& track) {
  std::vector<double> voiced;
  for (std::size_t i = 0; i < track.f0.size(); ++i) {
    if (track.voiced[i]) voiced.push_back(track.f0[i]);
  }
  REQUIRE(!voiced.empty());
  std::sort(voiced.begin(), voiced.end());
  return voiced[voiced.size() / 2];
}

}  // namespace

TEST_CASE("pitch tracking recovers a pure tone") {
  const F0Track track = f0_track(sine(150.0, 1.0));
  CHECK(std::abs(median_voiced_f0(track) - 150.0) <= 2.0);

  std::size_t voiced = 0;
  for (bool v : track.voiced) {
    if (v) ++voiced;
  }
  CHECK(voiced >= track.voiced.size() * 3 / 4);
}

TEST_CASE("pitch tracking spans the analysis band") {
  for (double f : {80.0, 120.0, 220.0, 330.0}) {
    CAPTURE(f);
    CHECK(std::abs(median_voiced_f0(f0_track(sine(f, 1.0))) - f) <= 2.0);
  }
}

TEST_CASE("silence is unvoiced") {
  const F0Track track = f0_track(silence(0.5));
  for (bool v : track.voiced) CHECK(!v);
}

TEST_CASE("energy track reads levels and its floor") {
  const std::vector<double> quiet = energy_track(silence(0.3));
  for (double e : quiet) CHECK(e == doctest::Approx(-100.0));

  // Halving the amplitude lowers every voiced frame by 6.02 dB.
  const Waveform loud = sine(150.0, 0.5, 0.4);
  Waveform soft = loud;
  for (float& s : soft.samples) s *= 0.5f;
  const std::vector<double> e_loud = energy_track(loud);
  const std::vector<double> e_soft = energy_track(soft);
  REQUIRE(e_loud.size() == e_soft.size());
  for (std::size_t i = 0; i < e_loud.size(); ++i) {
    CHECK(std::abs((e_loud[i] - e_soft[i]) - 6.0206) <= 0.1);
  }
}

TEST_CASE("pause segmentation measures an inserted gap") {
  const Waveform w =
      concat({sine(150.0, 0.8), silence(0.3), sine(160.0, 0.8)});
  const F0Track track = f0_track(w);
  const std::vector<double> energy = energy_track(w);
  const PauseSegmentation seg =
      segment_pauses(energy, track.voiced, 0.04, 0.01);
  REQUIRE(seg.pauses.size() == 1);
  CHECK(std::abs(seg.pauses[0].duration_s - 0.3) <= 0.02);
}

TEST_CASE("gaps shorter than the minimum are not pauses") {
  const Waveform w =
      concat({sine(150.0, 0.8), silence(0.05), sine(160.0, 0.8)});
  const F0Track track = f0_track(w);
  const PauseSegmentation seg =
      segment_pauses(energy_track(w), track.voiced, 0.04, 0.01);
  CHECK(seg.pauses.empty());
}

TEST_CASE("leading and trailing silence is outside the speech region") {
  const Waveform w = concat({silence(0.5), sine(150.0, 0.8), silence(0.5)});
  const F0Track track = f0_track(w);
  const PauseSegmentation seg =
      segment_pauses(energy_track(w), track.voiced, 0.04, 0.01);
  CHECK(seg.pauses.empty());
  CHECK(seg.speech_begin > 0);
  CHECK(seg.speech_end < seg.silent.size());
}

TEST_CASE("pause duration counts frames minus one hop plus one frame") {
  // A run of L silent frames lasts (L - 1) * hop + frame seconds.
  std::vector<double> energy(100, -30.0);
  std::vector<bool> voiced(100, true);
  for (std::size_t i = 40; i < 60; ++i) {
    energy[i] = -100.0;
    voiced[i] = false;
  }
  const PauseSegmentation seg = segment_pauses(energy, voiced, 0.04, 0.01);
  REQUIRE(seg.pauses.size() == 1);
  CHECK(seg.pauses[0].begin == 40);
  CHECK(seg.pauses[0].end == 60);
  CHECK(seg.pauses[0].duration_s == doctest::Approx(19 * 0.01 + 0.04));
}

TEST_CASE("all-quiet input reports no speech") {
  const PauseSegmentation seg = segment_pauses(
      std::vector<double>(50, -100.0), std::vector<bool>(50, false), 0.04,
      0.01);
  CHECK(seg.no_speech);
  CHECK(seg.pauses.empty());
}

TEST_CASE("jitter statistics on a constructed track") {
  // Alternating 150 Hz and 147.0588 Hz: periods 6.6667 and 6.8 ms, so every
  // consecutive difference is 0.1333 ms against a 6.7333 ms mean.
  F0Track track;
  track.frame_s = 0.04;
  track.hop_s = 0.01;
  for (int i = 0; i < 40; ++i) {
    const double f0 = (i % 2 == 0) ? 150.0 : 147.0588;
    track.f0.push_back(f0);
    track.voiced.push_back(true);
  }
  const JitterStats stats = jitter_stats(track);
  REQUIRE(stats.defined);
  const double t0 = 1.0 / 150.0;
  const double t1 = 1.0 / 147.0588;
  const double want = (t1 - t0) / (0.5 * (t0 + t1));
  CHECK(stats.avg == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("jitter is undefined without consecutive periods") {
  F0Track track;
  track.f0 = {150.0, 0.0, 150.0};
  track.voiced = {true, false, true};
  CHECK(!jitter_stats(track).defined);

  CHECK(!jitter_from_periods({}).defined);
  CHECK(!jitter_from_periods({{0.006}}).defined);

  const JitterStats from_pair =
      jitter_from_periods({{0.0066, 0.0068}});
  REQUIRE(from_pair.defined);
  CHECK(from_pair.avg == doctest::Approx(0.0002 / 0.0067).epsilon(1e-9));
}

TEST_CASE("pitch-synchronous periods track a steady tone") {
  const Waveform w = sine(150.0, 1.0);
  const F0Track track = f0_track(w);
  const std::vector<std::vector<double>> runs = period_runs(w, track);
  REQUIRE(!runs.empty());
  std::size_t total = 0;
  for (const auto& run : runs) {
    for (double t : run) {
      CHECK(std::abs(t - 1.0 / 150.0) <= 2e-4);
      ++total;
    }
  }
  CHECK(total >= 100);
  const JitterStats stats = jitter_from_periods(runs);
  REQUIRE(stats.defined);
  CHECK(stats.avg <= 0.003);
}

TEST_CASE("summary captures a tone with one pause") {
  const Waveform w =
      concat({sine(150.0, 1.0), silence(0.4), sine(150.0, 1.0)});
  const AcousticSummary s = summarize(w);
  CHECK(!s.no_speech);
  CHECK(!s.no_voicing);
  CHECK(std::abs(s.f0_avg - 150.0) <= 2.0);
  CHECK(s.f0_std <= 3.0);
  CHECK(s.pause_count == 1.0);
  CHECK(std::abs(s.pause_dur_avg - 0.4) <= 0.02);
  CHECK(s.pause_dur_std == 0.0);
  CHECK(s.jitter_avg <= 0.003);
}

TEST_CASE("halving the amplitude moves only the energy fields") {
  const Waveform loud =
      concat({sine(150.0, 1.0, 0.4), silence(0.4), sine(150.0, 1.0, 0.4)});
  Waveform soft = loud;
  for (float& v : soft.samples) v *= 0.5f;
  const AcousticSummary a = summarize(loud);
  const AcousticSummary b = summarize(soft);
  CHECK(std::abs((a.energy_avg - b.energy_avg) - 6.0206) <= 0.3);
  CHECK(a.f0_avg == doctest::Approx(b.f0_avg).epsilon(1e-3));
  CHECK(a.pause_count == b.pause_count);
  CHECK(std::abs(a.pause_dur_avg - b.pause_dur_avg) <= 1e-6);
  CHECK(std::abs(a.unvoiced_ratio - b.unvoiced_ratio) <= 0.03);
}

TEST_CASE("summary flags silence and unvoiced input") {
  const AcousticSummary s = summarize(silence(1.0));
  CHECK(s.no_speech);
  CHECK(s.no_voicing);
  CHECK(s.f0_avg == 0.0);
}

TEST_CASE("summary values align with the feature name list") {
  AcousticSummary s;
  s.f0_avg = 1.0;
  s.f0_std = 2.0;
  s.f0_deriv_avg = 3.0;
  s.energy_avg = 4.0;
  s.energy_std = 5.0;
  s.pause_dur_avg = 6.0;
  s.pause_dur_std = 7.0;
  s.pause_count = 8.0;
  s.unvoiced_ratio = 9.0;
  s.jitter_avg = 10.0;
  s.jitter_std = 11.0;
  const std::vector<double> v = summary_values(s);
  REQUIRE(v.size() == kSummaryFeatureCount);
  for (std::size_t i = 0; i < v.size(); ++i) {
    CHECK(v[i] == doctest::Approx(static_cast<double>(i + 1)));
  }
}

TEST_CASE("summary csv writes one row per utterance with flags") {
  spane::test::TempDir dir("prosodycsv");
  AcousticSummary clean;
  clean.f0_avg = 150.0;
  AcousticSummary flagged;
  flagged.no_voicing = true;
  flagged.no_speech = true;
  const std::string path = dir.file("prosody.csv");
  write_summary_csv(path, {{"a", clean}, {"b", flagged}});
  const std::string text = spane::test::read_file(path);
  CHECK(text.find("id,f0_avg") == 0);
  CHECK(text.find("\na,150") != std::string::npos);
  CHECK(text.find("no_voicing") != std::string::npos);
  CHECK(text.find("no_speech") != std::string::npos);
}

TEST_CASE("pitch tracking needs samples") {
  Waveform w;
  w.sample_rate = kRate;
  CHECK_THROWS_AS(f0_track(w), DataError);
}
