// tests/test_synth.cpp

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
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <doctest.h>

#include "spane/corpus.hpp"
#include "spane/errors.hpp"
#include "spane/prosody.hpp"
#include "spane/synth.hpp"
#include "test_support.hpp"

using namespace spane;

namespace {

UtteranceSpec base_spec() {
  UtteranceSpec spec;
  spec.f0_base_hz = 150.0;
  spec.duration_s = 3.0;
  return spec;
}

}  // namespace

TEST_CASE("synthesis is deterministic in the seed") {
  UtteranceSpec spec = base_spec();
  spec.jitter_pct = 0.01;
  spec.f0_var_hz = 8.0;
  spec.pauses.push_back({1.0, 0.4});
  const Waveform a = synth_utterance(spec, 42);
  const Waveform b = synth_utterance(spec, 42);
  CHECK(a.samples == b.samples);
  const Waveform c = synth_utterance(spec, 43);
  CHECK(a.samples != c.samples);
}

TEST_CASE("a flat spec yields the requested pitch and no jitter") {
  const Waveform w = synth_utterance(base_spec(), 1);
  const AcousticSummary s = summarize(w);
  CHECK(!s.no_voicing);
  CHECK(std::abs(s.f0_avg - 150.0) <= 2.0);
  CHECK(s.jitter_avg <= 0.003);
  CHECK(s.pause_count == 0.0);
}

TEST_CASE("injected jitter is measured back at its nominal size") {
  UtteranceSpec spec = base_spec();
  spec.jitter_pct = 0.02;
  const Waveform w = synth_utterance(spec, 5);
  const AcousticSummary s = summarize(w);
  CHECK(std::abs(s.jitter_avg - 0.02) <= 0.005);
}

TEST_CASE("scheduled pauses are measured back at their durations") {
  UtteranceSpec spec = base_spec();
  spec.duration_s = 3.5;
  spec.pauses.push_back({0.5, 0.3});
  spec.pauses.push_back({1.2, 0.5});
  const Waveform w = synth_utterance(spec, 9);
  const AcousticSummary s = summarize(w);
  CHECK(s.pause_count == 2.0);
  CHECK(std::abs(s.pause_dur_avg - 0.4) <= 0.02);
}

TEST_CASE("intonation depth widens the f0 spread") {
  UtteranceSpec flat = base_spec();
  UtteranceSpec wide = base_spec();
  wide.f0_var_hz = 12.0;
  const AcousticSummary a = summarize(synth_utterance(flat, 2));
  const AcousticSummary b = summarize(synth_utterance(wide, 2));
  CHECK(b.f0_std >= a.f0_std + 4.0);
}

TEST_CASE("pitch breaks raise the unvoiced ratio without adding pauses") {
  UtteranceSpec spec = base_spec();
  spec.breaks.push_back({1.0, 0.06});
  spec.breaks.push_back({2.0, 0.06});
  const AcousticSummary with_breaks = summarize(synth_utterance(spec, 4));
  const AcousticSummary clean = summarize(synth_utterance(base_spec(), 4));
  CHECK(with_breaks.unvoiced_ratio >= clean.unvoiced_ratio + 0.02);
  CHECK(with_breaks.pause_count == 0.0);
}

TEST_CASE("spec validation rejects out-of-range parameters") {
  UtteranceSpec bad = base_spec();
  bad.f0_base_hz = -10.0;
  CHECK_THROWS_AS(validate_spec(bad), ConfigError);

  bad = base_spec();
  bad.jitter_pct = 0.6;
  CHECK_THROWS_AS(validate_spec(bad), ConfigError);

  bad = base_spec();
  bad.duration_s = 0.0;
  CHECK_THROWS_AS(validate_spec(bad), ConfigError);

  bad = base_spec();
  bad.pauses.push_back({5.0, 0.5});  // beyond the utterance
  CHECK_THROWS_AS(validate_spec(bad), ConfigError);

  bad = base_spec();
  bad.amplitude = 1.5;
  CHECK_THROWS_AS(validate_spec(bad), ConfigError);
}

TEST_CASE("f0 smoothing flattens fast modulation") {
  // Tremor sits far above the smoothing cutoff, so the frame-to-frame
  // derivative collapses.  11 Hz lies near a null of the 0.18 s averaging
  // window; rates near 8 Hz land on its first sidelobe, where a fifth of
  // the tremor survives.  Slow intonation and jitter stay off: the first
  // passes the filter by design, the second leaves a period-level wobble
  // the contour filter cannot remove, and either keeps the smoothed
  // derivative off its floor.
  UtteranceSpec spec = base_spec();
  spec.f0_var_hz = 0.0;
  spec.tremor_depth_hz = 9.0;
  spec.tremor_rate_hz = 11.0;
  spec.jitter_pct = 0.0;
  const AcousticSummary before = summarize(synth_utterance(spec, 11));
  const Waveform smoothed = degrade(spec, {f0_smooth(0.18)}, 11);
  const AcousticSummary after = summarize(smoothed);
  CHECK(before.f0_deriv_avg >= 5.0 * after.f0_deriv_avg);
}

TEST_CASE("energy gain maps to an absolute output level") {
  UtteranceSpec quiet = base_spec();
  quiet.amplitude = 0.1;
  UtteranceSpec loud = base_spec();
  loud.amplitude = 0.4;
  // Same gain, different inputs: outputs land on the same level.
  const AcousticSummary a =
      summarize(degrade(quiet, {energy_gain(6.0)}, 3));
  const AcousticSummary b = summarize(degrade(loud, {energy_gain(6.0)}, 3));
  CHECK(std::abs(a.energy_avg - b.energy_avg) <= 0.1);

  // +6.02 dB over the reference amplitude doubles it.
  const AcousticSummary ref =
      summarize(synth_utterance(base_spec(), 3));  // amplitude 0.25
  const AcousticSummary boosted =
      summarize(degrade(base_spec(), {energy_gain(6.0206)}, 3));
  CHECK(std::abs((boosted.energy_avg - ref.energy_avg) - 6.0206) <= 0.1);

  // A gain that would clip is rejected.
  CHECK_THROWS_AS(degrade(base_spec(), {energy_gain(15.0)}, 3),
                  ConfigError);
}

TEST_CASE("jitter removal zeroes the perturbation") {
  UtteranceSpec spec = base_spec();
  spec.jitter_pct = 0.03;
  const AcousticSummary before = summarize(synth_utterance(spec, 8));
  const AcousticSummary after =
      summarize(degrade(spec, {jitter_remove()}, 8));
  CHECK(before.jitter_avg >= 0.02);
  CHECK(after.jitter_avg <= 0.004);
}

TEST_CASE("pause preservation leaves pause timing intact") {
  UtteranceSpec spec = base_spec();
  spec.duration_s = 3.5;
  spec.f0_var_hz = 10.0;
  spec.jitter_pct = 0.02;
  spec.pauses.push_back({0.8, 0.35});
  spec.pauses.push_back({2.0, 0.2});
  const AcousticSummary before = summarize(synth_utterance(spec, 21));
  const Waveform degraded = degrade(
      spec, {f0_smooth(0.18), energy_gain(6.0), jitter_remove(),
             pause_preserve()},
      21);
  const AcousticSummary after = summarize(degraded);
  CHECK(after.pause_count == before.pause_count);
  CHECK(std::abs(after.pause_dur_avg - before.pause_dur_avg) <= 0.02);
}

TEST_CASE("transcript resynthesis flattens speaker identity") {
  UtteranceSpec spec = base_spec();
  spec.f0_base_hz = 180.0;
  spec.f0_var_hz = 12.0;
  spec.tremor_depth_hz = 6.0;
  spec.jitter_pct = 0.03;
  spec.pauses.push_back({1.0, 0.45});
  const Waveform flat = degrade(spec, {transcript_resynth(120.0, 0.25)}, 6);
  const AcousticSummary s = summarize(flat);
  CHECK(std::abs(s.f0_avg - 120.0) <= 2.0);
  CHECK(s.jitter_avg <= 0.004);
  CHECK(s.f0_std <= 2.0);
  REQUIRE(s.pause_count >= 1.0);
  CHECK(std::abs(s.pause_dur_avg - 0.25) <= 0.02);
}

TEST_CASE("an empty policy list reproduces the original rendering") {
  UtteranceSpec spec = base_spec();
  spec.jitter_pct = 0.015;
  spec.f0_var_hz = 9.0;
  spec.pauses.push_back({1.1, 0.3});
  const Waveform direct = synth_utterance(spec, 77);
  const Waveform via_degrade = degrade(spec, {}, 77);
  CHECK(direct.samples == via_degrade.samples);
}

TEST_CASE("policy constructors fill only their own parameters") {
  CHECK(f0_smooth(0.2).kind == PolicyKind::kF0Smooth);
  CHECK(f0_smooth(0.2).window_s == doctest::Approx(0.2));
  CHECK(energy_gain(-3.0).gain_db == doctest::Approx(-3.0));
  CHECK(jitter_remove().kind == PolicyKind::kJitterRemove);
  CHECK(pause_preserve().kind == PolicyKind::kPausePreserve);
  const DegradationPolicy t = transcript_resynth(110.0, 0.3);
  CHECK(t.target_f0_base_hz == doctest::Approx(110.0));
  CHECK(t.uniform_pause_s == doctest::Approx(0.3));
}

TEST_CASE("cohort synthesis writes a consistent corpus") {
  spane::test::TempDir dir("cohort");
  CohortConfig cfg;
  cfg.speakers_per_group = 2;
  cfg.utterances_per_speaker = 2;
  cfg.duration_s = {2.0, 2.4};
  cfg.seed = 31;
  const std::vector<CohortUtterance> cohort =
      synth_cohort(cfg, dir.str());

  REQUIRE(cohort.size() == 8);
  const std::vector<UtteranceRecord> manifest =
      load_manifest(dir.file("manifest.jsonl"));
  REQUIRE(manifest.size() == 8);

  std::set<std::string> speakers;
  std::set<std::string> groups;
  for (const auto& u : cohort) {
    speakers.insert(u.record.speaker);
    groups.insert(u.record.group == Group::kControl ? "hc" : "pd");
    CHECK(std::filesystem::exists(dir.str() + "/" + u.record.audio_path));
    CHECK(std::filesystem::exists(dir.str() + "/" + u.record.feature_path));
    CHECK(!u.record.transcript.empty());
  }
  CHECK(speakers.size() == 4);
  CHECK(groups.size() == 2);

  // Both genders appear within each group.
  std::set<Gender> hc_genders;
  for (const auto& u : cohort) {
    if (u.record.group == Group::kControl) hc_genders.insert(u.record.gender);
  }
  CHECK(hc_genders.size() == 2);

  // Waveforms round-trip through the written files.
  const Waveform direct = synth_utterance(cohort[0].spec,
                                          cohort[0].synth_seed);
  const Waveform loaded =
      read_wav(dir.str() + "/" + cohort[0].record.audio_path);
  REQUIRE(loaded.samples.size() == direct.samples.size());
  for (std::size_t i = 0; i < direct.samples.size(); i += 160) {
    CHECK(std::abs(loaded.samples[i] - direct.samples[i]) <=
          1.6f / 32768.0f);
  }
}

TEST_CASE("cohort synthesis is deterministic per seed") {
  CohortConfig cfg;
  cfg.speakers_per_group = 2;
  cfg.utterances_per_speaker = 1;
  cfg.duration_s = {2.0, 2.2};
  cfg.seed = 11;
  spane::test::TempDir a("cohort-a");
  spane::test::TempDir b("cohort-b");
  synth_cohort(cfg, a.str());
  synth_cohort(cfg, b.str());
  CHECK(spane::test::read_file(a.file("manifest.jsonl")) ==
        spane::test::read_file(b.file("manifest.jsonl")));
  CHECK(spane::test::read_file(a.file("specs.jsonl")) ==
        spane::test::read_file(b.file("specs.jsonl")));
  const std::vector<UtteranceRecord> manifest =
      load_manifest(a.file("manifest.jsonl"));
  CHECK(spane::test::read_file(a.str() + "/" + manifest[0].audio_path) ==
        spane::test::read_file(b.str() + "/" + manifest[0].audio_path));
}

TEST_CASE("cohort groups with disjoint jitter ranges separate cleanly") {
  CohortConfig cfg;
  cfg.speakers_per_group = 3;
  cfg.utterances_per_speaker = 1;
  cfg.duration_s = {2.0, 2.3};
  cfg.control.jitter_pct = {0.0, 0.005};
  cfg.parkinson.jitter_pct = {0.03, 0.05};
  // Tremor leaks real consecutive-period variation into measured jitter;
  // pin it to zero so the separation reflects the injected ranges alone.
  cfg.control.tremor_depth_hz = {0.0, 0.0};
  cfg.parkinson.tremor_depth_hz = {0.0, 0.0};
  cfg.seed = 17;
  spane::test::TempDir dir("jitsep");
  const std::vector<CohortUtterance> cohort = synth_cohort(cfg, dir.str());
  double max_hc = 0.0;
  double min_pd = 1.0;
  for (const auto& u : cohort) {
    const AcousticSummary s =
        summarize(synth_utterance(u.spec, u.synth_seed));
    if (u.record.group == Group::kControl) {
      max_hc = std::max(max_hc, s.jitter_avg);
    } else {
      min_pd = std::min(min_pd, s.jitter_avg);
    }
  }
  CHECK(max_hc < min_pd);
}

TEST_CASE("cohort synthesis rejects degenerate sizes") {
  CohortConfig cfg;
  cfg.speakers_per_group = 1;
  spane::test::TempDir dir("badcohort");
  CHECK_THROWS_AS(synth_cohort(cfg, dir.str()), ConfigError);
}

TEST_CASE("spec jsonl round-trips") {
  spane::test::TempDir dir("specjsonl");
  CohortConfig cfg;
  cfg.speakers_per_group = 2;
  cfg.utterances_per_speaker = 1;
  cfg.duration_s = {2.0, 2.2};
  cfg.seed = 23;
  const std::vector<CohortUtterance> cohort = synth_cohort(cfg, dir.str());
  const std::vector<CohortUtterance> back =
      read_spec_jsonl(dir.file("specs.jsonl"));
  REQUIRE(back.size() == cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    CHECK(back[i].record.id == cohort[i].record.id);
    CHECK(back[i].synth_seed == cohort[i].synth_seed);
    CHECK(back[i].spec.f0_base_hz ==
          doctest::Approx(cohort[i].spec.f0_base_hz).epsilon(1e-12));
    CHECK(back[i].spec.jitter_pct ==
          doctest::Approx(cohort[i].spec.jitter_pct).epsilon(1e-12));
    CHECK(back[i].spec.pauses.size() == cohort[i].spec.pauses.size());
    const Waveform a = synth_utterance(cohort[i].spec, cohort[i].synth_seed);
    const Waveform b = synth_utterance(back[i].spec, back[i].synth_seed);
    CHECK(a.samples == b.samples);
  }
}
