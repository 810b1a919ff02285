// core/src/synth.cpp

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

#include "spane/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <nlohmann/json.hpp>

#include "spane/rng.hpp"

namespace spane {

namespace {

constexpr double kPi = 3.14159265358979323846;
// Short enough that a frame quiet enough to count as silent cannot hold a
// matchable pitch period from the fade tail; voicing at pause edges then
// stays stable under prosodic edits and measured pause lengths with it.
constexpr double kFadeS = 0.002;
constexpr double kControlGridS = 0.001;
constexpr int kHarmonics = 5;

double pulse_shape(double phase) {
  double v = 0.0;
  for (int h = 1; h <= kHarmonics; ++h) {
    v += std::sin(2.0 * kPi * h * phase) / h;
  }
  return v;
}

double pulse_peak() {
  static const double peak = [] {
    double best = 0.0;
    for (int i = 0; i < 100000; ++i) {
      best = std::max(best, std::abs(pulse_shape(i / 100000.0)));
    }
    return best;
  }();
  return peak;
}

void check_intervals(const std::vector<PauseSpec>& pauses, double duration,
                     const char* what) {
  double prev_end = 0.0;
  for (const auto& p : pauses) {
    if (p.duration_s <= 0.0) {
      throw ConfigError(std::string(what) + ": non-positive duration");
    }
    if (p.onset_s < prev_end) {
      throw ConfigError(std::string(what) +
                        ": intervals overlap or are unsorted");
    }
    if (p.onset_s + p.duration_s > duration) {
      throw ConfigError(std::string(what) + ": interval past utterance end");
    }
    prev_end = p.onset_s + p.duration_s;
  }
}

}  // namespace

void validate_spec(const UtteranceSpec& spec) {
  if (spec.f0_base_hz < 60.0 || spec.f0_base_hz > 400.0) {
    throw ConfigError("spec: f0_base " + std::to_string(spec.f0_base_hz) +
                      " outside [60, 400]");
  }
  if (spec.f0_var_hz < 0.0 || spec.tremor_depth_hz < 0.0 ||
      spec.intonation_rate_hz < 0.0 || spec.tremor_rate_hz < 0.0) {
    throw ConfigError("spec: modulation fields must be non-negative");
  }
  if (spec.jitter_pct < 0.0 || spec.jitter_pct > 0.2) {
    throw ConfigError("spec: jitter_pct outside [0, 0.2]");
  }
  if (spec.duration_s <= 0.0 || spec.duration_s > 60.0) {
    throw ConfigError("spec: duration outside (0, 60] s");
  }
  if (spec.amplitude <= 0.0 || spec.amplitude > 1.0) {
    throw ConfigError("spec: amplitude outside (0, 1]");
  }
  if (spec.sample_rate < 8000) {
    throw ConfigError("spec: sample rate below 8000");
  }
  check_intervals(spec.pauses, spec.duration_s, "spec pauses");
  for (const auto& b : spec.breaks) {
    if (b.duration_s <= 0.0 || b.onset_s < 0.0 ||
        b.onset_s + b.duration_s > spec.duration_s) {
      throw ConfigError("spec breaks: interval outside utterance");
    }
  }
}

DegradationPolicy f0_smooth(double window_s) {
  if (window_s <= 0.0) throw ConfigError("f0_smooth: window must be positive");
  DegradationPolicy p;
  p.kind = PolicyKind::kF0Smooth;
  p.window_s = window_s;
  return p;
}

DegradationPolicy energy_gain(double gain_db) {
  DegradationPolicy p;
  p.kind = PolicyKind::kEnergyGain;
  p.gain_db = gain_db;
  return p;
}

DegradationPolicy jitter_remove() {
  DegradationPolicy p;
  p.kind = PolicyKind::kJitterRemove;
  return p;
}

DegradationPolicy pause_preserve() {
  DegradationPolicy p;
  p.kind = PolicyKind::kPausePreserve;
  return p;
}

DegradationPolicy transcript_resynth(double target_f0_base_hz,
                                     double uniform_pause_s) {
  if (target_f0_base_hz < 60.0 || target_f0_base_hz > 400.0) {
    throw ConfigError("transcript policy: target F0 outside [60, 400]");
  }
  if (uniform_pause_s <= 0.0) {
    throw ConfigError("transcript policy: pause duration must be positive");
  }
  DegradationPolicy p;
  p.kind = PolicyKind::kTranscriptResynth;
  p.target_f0_base_hz = target_f0_base_hz;
  p.uniform_pause_s = uniform_pause_s;
  return p;
}

RenderPlan make_plan(const UtteranceSpec& spec) {
  validate_spec(spec);
  RenderPlan plan;
  plan.jitter_pct = spec.jitter_pct;
  plan.pauses = spec.pauses;
  plan.breaks = spec.breaks;
  plan.amplitude = spec.amplitude;
  plan.duration_s = spec.duration_s;
  plan.sample_rate = spec.sample_rate;

  const std::size_t grid =
      static_cast<std::size_t>(std::ceil(spec.duration_s / kControlGridS)) + 2;
  plan.f0_ms_hz.resize(grid);
  for (std::size_t i = 0; i < grid; ++i) {
    const double t = i * kControlGridS;
    const double f0 =
        spec.f0_base_hz +
        spec.f0_var_hz * std::sin(2.0 * kPi * spec.intonation_rate_hz * t +
                                  spec.intonation_phase) +
        spec.tremor_depth_hz * std::sin(2.0 * kPi * spec.tremor_rate_hz * t +
                                        spec.tremor_phase);
    plan.f0_ms_hz[i] = std::clamp(f0, 50.0, 480.0);
  }
  return plan;
}

void apply_policy(RenderPlan* plan, const DegradationPolicy& policy) {
  switch (policy.kind) {
    case PolicyKind::kF0Smooth: {
      if (policy.window_s <= 0.0) {
        throw ConfigError("f0_smooth: window must be positive");
      }
      std::size_t w = std::max<long>(1, std::lround(policy.window_s * 1000.0));
      if (w % 2 == 0) ++w;
      const std::size_t half = w / 2;
      const std::vector<double>& f0 = plan->f0_ms_hz;
      std::vector<double> prefix(f0.size() + 1, 0.0);
      for (std::size_t i = 0; i < f0.size(); ++i) {
        prefix[i + 1] = prefix[i] + f0[i];
      }
      std::vector<double> smooth(f0.size());
      for (std::size_t i = 0; i < f0.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(f0.size() - 1, i + half);
        smooth[i] = (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1);
      }
      plan->f0_ms_hz = std::move(smooth);
      // Smoothing restores voicing continuity as well.
      plan->breaks.clear();
      break;
    }
    case PolicyKind::kEnergyGain:
      plan->amplitude =
          kReferenceAmplitude * std::pow(10.0, policy.gain_db / 20.0);
      if (plan->amplitude > 1.0) {
        throw ConfigError("energy_gain: gain drives amplitude past full scale");
      }
      break;
    case PolicyKind::kJitterRemove:
      plan->jitter_pct = 0.0;
      break;
    case PolicyKind::kPausePreserve:
      break;
    case PolicyKind::kTranscriptResynth: {
      std::fill(plan->f0_ms_hz.begin(), plan->f0_ms_hz.end(),
                policy.target_f0_base_hz);
      plan->jitter_pct = 0.0;
      plan->breaks.clear();
      plan->amplitude = kReferenceAmplitude;
      for (auto& p : plan->pauses) p.duration_s = policy.uniform_pause_s;
      check_intervals(plan->pauses, plan->duration_s, "transcript pauses");
      break;
    }
  }
}

namespace {

void silence_interval(std::vector<double>* env, double onset, double dur,
                      double sr) {
  const auto n = static_cast<double>(env->size());
  auto clamp_idx = [&](double t) {
    return static_cast<std::size_t>(std::clamp(std::round(t * sr), 0.0, n));
  };
  // Fades sit outside the interval so the scheduled silence is intact.
  const std::size_t fade_out_b = clamp_idx(onset - kFadeS);
  const std::size_t zero_b = clamp_idx(onset);
  const std::size_t zero_e = clamp_idx(onset + dur);
  const std::size_t fade_in_e = clamp_idx(onset + dur + kFadeS);
  for (std::size_t i = fade_out_b; i < zero_b; ++i) {
    const double u = (i / sr - (onset - kFadeS)) / kFadeS;
    (*env)[i] = std::min((*env)[i], 0.5 * (1.0 + std::cos(kPi * u)));
  }
  for (std::size_t i = zero_b; i < zero_e; ++i) (*env)[i] = 0.0;
  for (std::size_t i = zero_e; i < fade_in_e; ++i) {
    const double u = (i / sr - (onset + dur)) / kFadeS;
    (*env)[i] = std::min((*env)[i], 0.5 * (1.0 - std::cos(kPi * u)));
  }
}

}  // namespace

Waveform render_plan(const RenderPlan& plan, std::uint64_t seed) {
  if (plan.duration_s <= 0.0 || plan.sample_rate < 8000 ||
      plan.f0_ms_hz.size() < 2) {
    throw ConfigError("render: invalid plan");
  }
  if (plan.amplitude <= 0.0 || plan.amplitude > 1.0) {
    throw ConfigError("render: amplitude outside (0, 1]");
  }
  const double sr = plan.sample_rate;
  const std::size_t n =
      static_cast<std::size_t>(std::lround(plan.duration_s * sr));

  std::vector<double> env(n, 1.0);
  for (const auto& p : plan.pauses) {
    silence_interval(&env, p.onset_s, p.duration_s, sr);
  }
  for (const auto& b : plan.breaks) {
    silence_interval(&env, b.onset_s, b.duration_s, sr);
  }

  auto f0_at = [&](double t) {
    const double pos =
        std::clamp(t / kControlGridS,
                   0.0, static_cast<double>(plan.f0_ms_hz.size() - 1));
    const auto i0 = static_cast<std::size_t>(pos);
    const std::size_t i1 = std::min(i0 + 1, plan.f0_ms_hz.size() - 1);
    const double frac = pos - i0;
    return plan.f0_ms_hz[i0] * (1.0 - frac) + plan.f0_ms_hz[i1] * frac;
  };

  Rng rng(seed);
  double period_start = 0.0;
  double sign = 1.0;
  auto draw_period = [&] {
    // Alternating-sign uniform magnitude: consecutive-period perturbation
    // averages to jitter_pct itself, matching the generator-as-oracle tests.
    const double u = rng.uniform(0.0, plan.jitter_pct);
    return (1.0 + sign * u) / f0_at(period_start);
  };
  double period = draw_period();

  const double scale = plan.amplitude / pulse_peak();
  Waveform w;
  w.sample_rate = plan.sample_rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = i / sr;
    while (t >= period_start + period) {
      period_start += period;
      sign = -sign;
      period = draw_period();
    }
    const double phase = (t - period_start) / period;
    w.samples[i] =
        static_cast<float>(scale * pulse_shape(phase) * env[i]);
  }
  return w;
}

Waveform synth_utterance(const UtteranceSpec& spec, std::uint64_t seed) {
  return render_plan(make_plan(spec), seed);
}

Waveform degrade(const UtteranceSpec& spec,
                 const std::vector<DegradationPolicy>& policies,
                 std::uint64_t seed) {
  RenderPlan plan = make_plan(spec);
  for (const auto& policy : policies) apply_policy(&plan, policy);
  return render_plan(plan, seed);
}

CohortGroupParams parkinson_defaults() {
  CohortGroupParams p;
  p.tremor_depth_hz = {7.0, 11.0};
  p.jitter_pct = {0.022, 0.032};
  p.breaks_per_s = {1.0, 1.8};
  // Fewer, longer pauses; the duration range stays clear of the control
  // range so group membership survives pause-preserving degradation.
  p.pause_duration_s = {0.36, 0.90};
  p.pause_count_min = 3;
  p.pause_count_max = 3;
  return p;
}

namespace {

constexpr double kMinSegmentS = 0.25;
constexpr double kBreakClearanceS = 0.08;

double draw_range(Rng& rng, const ParamRange& r, const char* what) {
  if (r.hi < r.lo) {
    throw ConfigError(std::string("cohort: empty range for ") + what);
  }
  return rng.uniform(r.lo, r.hi);
}

const char* kPhrases[] = {
    "la casa es azul y grande",
    "el viento mueve las hojas secas",
    "mañana compramos pan en la plaza",
    "los niños juegan junto al río",
    "ella canta una canción antigua",
    "el tren llega tarde otra vez",
    "hay café caliente en la cocina",
    "la lluvia limpia las calles grises",
};

struct PauseLayout {
  std::vector<PauseSpec> pauses;
};

PauseLayout draw_pauses(Rng& rng, int count, const ParamRange& dur_range,
                        double duration) {
  PauseLayout layout;
  if (count == 0) return layout;
  const double reserved = (count + 1) * kMinSegmentS;
  if (duration <= reserved) {
    throw ConfigError("cohort: utterance too short for its pause schedule");
  }

  std::vector<double> durs(count);
  double total = 0.0;
  bool fits = false;
  for (int attempt = 0; attempt < 50 && !fits; ++attempt) {
    total = 0.0;
    for (double& d : durs) {
      d = draw_range(rng, dur_range, "pause_duration_s");
      total += d;
    }
    fits = total + reserved <= duration;
  }
  if (!fits) {
    const double scale = (duration - reserved) * 0.95 / total;
    total = 0.0;
    for (double& d : durs) {
      d *= scale;
      total += d;
    }
  }

  std::vector<double> weights(count + 1);
  double weight_sum = 0.0;
  for (double& w : weights) {
    w = 0.2 + rng.uniform();
    weight_sum += w;
  }
  const double spare = duration - total - reserved;
  double cursor = 0.0;
  for (int k = 0; k < count; ++k) {
    cursor += kMinSegmentS + spare * weights[k] / weight_sum;
    layout.pauses.push_back({cursor, durs[k]});
    cursor += durs[k];
  }
  return layout;
}

std::vector<PitchBreakSpec> draw_breaks(Rng& rng, double rate,
                                        const std::vector<PauseSpec>& pauses,
                                        double duration) {
  const double expected = rate * duration;
  int count = static_cast<int>(expected);
  if (rng.uniform() < expected - count) ++count;

  // Speech segments between pauses.
  std::vector<std::pair<double, double>> segments;
  double cursor = 0.0;
  for (const auto& p : pauses) {
    segments.emplace_back(cursor, p.onset_s);
    cursor = p.onset_s + p.duration_s;
  }
  segments.emplace_back(cursor, duration);

  std::vector<PitchBreakSpec> breaks;
  for (int k = 0; k < count; ++k) {
    const double bdur = rng.uniform(0.04, 0.06);
    for (int attempt = 0; attempt < 50; ++attempt) {
      const double t = rng.uniform(0.0, duration - bdur);
      bool inside = false;
      for (const auto& [lo, hi] : segments) {
        if (t >= lo + kBreakClearanceS && t + bdur <= hi - kBreakClearanceS) {
          inside = true;
          break;
        }
      }
      if (!inside) continue;
      bool clear = true;
      for (const auto& b : breaks) {
        if (t < b.onset_s + b.duration_s + kBreakClearanceS &&
            b.onset_s < t + bdur + kBreakClearanceS) {
          clear = false;
          break;
        }
      }
      if (!clear) continue;
      breaks.push_back({t, bdur});
      break;
    }
  }
  std::sort(breaks.begin(), breaks.end(),
            [](const PitchBreakSpec& a, const PitchBreakSpec& b) {
              return a.onset_s < b.onset_s;
            });
  return breaks;
}

FrameMatrix synth_features(const CohortConfig& cfg, const std::string& speaker,
                           const std::string& utt_id, double duration) {
  Rng voice_rng(derived_seed(cfg.seed, speaker + "#voice"));
  std::vector<double> direction(cfg.feature_dim);
  double norm = 0.0;
  for (double& v : direction) {
    v = voice_rng.normal();
    norm += v * v;
  }
  norm = std::sqrt(norm);
  if (norm < 1e-12) norm = 1.0;

  FrameMatrix m;
  m.dim = cfg.feature_dim;
  m.hop_s = static_cast<float>(cfg.feature_hop_s);
  m.frames = static_cast<std::uint32_t>(
      std::max<long>(2, std::lround(duration / cfg.feature_hop_s)));
  m.data.resize(std::size_t(m.frames) * m.dim);
  Rng frame_rng(derived_seed(cfg.seed, utt_id + "#fmat"));
  for (std::uint32_t t = 0; t < m.frames; ++t) {
    float* row = m.data.data() + std::size_t(t) * m.dim;
    for (std::uint32_t j = 0; j < m.dim; ++j) {
      row[j] = static_cast<float>(direction[j] / norm +
                                  cfg.feature_noise_std * frame_rng.normal());
    }
  }
  return m;
}

std::string two_digits(int v) {
  std::string s = std::to_string(v);
  return s.size() < 2 ? "0" + s : s;
}

}  // namespace

std::vector<CohortUtterance> synth_cohort(const CohortConfig& cfg,
                                          const std::string& out_dir) {
  if (cfg.speakers_per_group < 2) {
    throw ConfigError("cohort: need at least 2 speakers per group");
  }
  if (cfg.utterances_per_speaker < 1) {
    throw ConfigError("cohort: need at least 1 utterance per speaker");
  }
  if (cfg.feature_dim < 1 || cfg.feature_hop_s <= 0.0) {
    throw ConfigError("cohort: invalid feature matrix settings");
  }

  namespace fs = std::filesystem;
  fs::create_directories(fs::path(out_dir) / "wav");
  fs::create_directories(fs::path(out_dir) / "fmat");

  std::vector<CohortUtterance> cohort;
  std::size_t phrase_index = 0;
  for (const Group group : {Group::kControl, Group::kParkinson}) {
    const CohortGroupParams& params =
        group == Group::kControl ? cfg.control : cfg.parkinson;
    const std::string prefix = group == Group::kControl ? "hc" : "pd";
    for (int s = 0; s < cfg.speakers_per_group; ++s) {
      const std::string speaker = prefix + two_digits(s);
      const Gender gender = s % 2 == 0 ? Gender::kMale : Gender::kFemale;
      Rng srng(derived_seed(cfg.seed, speaker));
      const double f0_base = draw_range(
          srng,
          gender == Gender::kMale ? params.f0_base_male_hz
                                  : params.f0_base_female_hz,
          "f0_base");
      const double f0_var = draw_range(srng, params.f0_var_hz, "f0_var_hz");
      const double tremor =
          draw_range(srng, params.tremor_depth_hz, "tremor_depth_hz");
      const double jitter = draw_range(srng, params.jitter_pct, "jitter_pct");
      const double break_rate =
          draw_range(srng, params.breaks_per_s, "breaks_per_s");

      for (int u = 0; u < cfg.utterances_per_speaker; ++u) {
        const std::string id = speaker + "_u" + two_digits(u);
        Rng urng(derived_seed(cfg.seed, id));

        UtteranceSpec spec;
        spec.f0_base_hz = f0_base;
        spec.f0_var_hz = f0_var;
        spec.tremor_depth_hz = tremor;
        spec.jitter_pct = jitter;
        spec.sample_rate = cfg.sample_rate;
        spec.duration_s = draw_range(urng, cfg.duration_s, "duration_s");
        spec.amplitude = draw_range(urng, cfg.amplitude, "amplitude");
        spec.intonation_phase = urng.uniform(0.0, 2.0 * kPi);
        spec.tremor_phase = urng.uniform(0.0, 2.0 * kPi);

        if (params.pause_count_min < 0 ||
            params.pause_count_max < params.pause_count_min) {
          throw ConfigError("cohort: invalid pause count range");
        }
        const int pause_count =
            params.pause_count_min +
            static_cast<int>(urng.uniform_int(
                params.pause_count_max - params.pause_count_min + 1));
        spec.pauses =
            draw_pauses(urng, pause_count, params.pause_duration_s,
                        spec.duration_s)
                .pauses;
        spec.breaks =
            draw_breaks(urng, break_rate, spec.pauses, spec.duration_s);
        validate_spec(spec);

        CohortUtterance item;
        item.spec = spec;
        item.synth_seed = derived_seed(cfg.seed, id + "#synth");
        item.record.id = id;
        item.record.speaker = speaker;
        item.record.gender = gender;
        item.record.group = group;
        item.record.task = Task::kSentences;
        item.record.audio_path = "wav/" + id + ".wav";
        item.record.feature_path = "fmat/" + id + ".fmat";
        item.record.transcript =
            kPhrases[phrase_index++ % (sizeof(kPhrases) / sizeof(kPhrases[0]))];

        const Waveform w = synth_utterance(spec, item.synth_seed);
        write_wav((fs::path(out_dir) / item.record.audio_path).string(), w);
        write_fmat((fs::path(out_dir) / item.record.feature_path).string(),
                   synth_features(cfg, speaker, id, spec.duration_s));
        cohort.push_back(std::move(item));
      }
    }
  }

  std::vector<UtteranceRecord> records;
  records.reserve(cohort.size());
  for (const auto& item : cohort) records.push_back(item.record);
  write_manifest((fs::path(out_dir) / "manifest.jsonl").string(), records);
  write_spec_jsonl((fs::path(out_dir) / "specs.jsonl").string(), cohort);
  return cohort;
}

namespace {

nlohmann::json spec_to_json(const UtteranceSpec& s) {
  nlohmann::json j;
  j["f0_base_hz"] = s.f0_base_hz;
  j["f0_var_hz"] = s.f0_var_hz;
  j["intonation_rate_hz"] = s.intonation_rate_hz;
  j["intonation_phase"] = s.intonation_phase;
  j["tremor_depth_hz"] = s.tremor_depth_hz;
  j["tremor_rate_hz"] = s.tremor_rate_hz;
  j["tremor_phase"] = s.tremor_phase;
  j["jitter_pct"] = s.jitter_pct;
  j["duration_s"] = s.duration_s;
  j["amplitude"] = s.amplitude;
  j["sample_rate"] = s.sample_rate;
  auto intervals = [](const auto& list) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : list) {
      arr.push_back({p.onset_s, p.duration_s});
    }
    return arr;
  };
  j["pauses"] = intervals(s.pauses);
  j["breaks"] = intervals(s.breaks);
  return j;
}

UtteranceSpec spec_from_json(const nlohmann::json& j,
                             const std::string& context) {
  UtteranceSpec s;
  try {
    s.f0_base_hz = j.at("f0_base_hz").get<double>();
    s.f0_var_hz = j.at("f0_var_hz").get<double>();
    s.intonation_rate_hz = j.at("intonation_rate_hz").get<double>();
    s.intonation_phase = j.at("intonation_phase").get<double>();
    s.tremor_depth_hz = j.at("tremor_depth_hz").get<double>();
    s.tremor_rate_hz = j.at("tremor_rate_hz").get<double>();
    s.tremor_phase = j.at("tremor_phase").get<double>();
    s.jitter_pct = j.at("jitter_pct").get<double>();
    s.duration_s = j.at("duration_s").get<double>();
    s.amplitude = j.at("amplitude").get<double>();
    s.sample_rate = j.at("sample_rate").get<int>();
    for (const auto& p : j.at("pauses")) {
      s.pauses.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    for (const auto& p : j.at("breaks")) {
      s.breaks.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(context + ": bad utterance spec: " + e.what());
  }
  return s;
}

}  // namespace

void write_spec_jsonl(const std::string& path,
                      const std::vector<CohortUtterance>& cohort) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("specs: cannot open " + path);
  for (const auto& item : cohort) {
    nlohmann::json j;
    j["id"] = item.record.id;
    j["speaker"] = item.record.speaker;
    j["gender"] = to_string(item.record.gender);
    j["group"] = to_string(item.record.group);
    j["task"] = to_string(item.record.task);
    j["audio_path"] = item.record.audio_path;
    j["feature_path"] = item.record.feature_path;
    j["transcript"] = item.record.transcript;
    j["synth_seed"] = item.synth_seed;
    j["spec"] = spec_to_json(item.spec);
    out << j.dump() << '\n';
  }
  if (!out) throw DataError("specs: write failed for " + path);
}

std::vector<CohortUtterance> read_spec_jsonl(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("specs: cannot open " + path);
  std::vector<CohortUtterance> cohort;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = path + ":" + std::to_string(line_no);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError(context + ": bad JSON: " + e.what());
    }
    CohortUtterance item;
    try {
      item.record.id = j.at("id").get<std::string>();
      item.record.speaker = j.at("speaker").get<std::string>();
      item.record.gender = parse_gender(j.at("gender").get<std::string>(), context);
      item.record.group = parse_group(j.at("group").get<std::string>(), context);
      item.record.task = parse_task(j.at("task").get<std::string>(), context);
      item.record.audio_path = j.at("audio_path").get<std::string>();
      item.record.feature_path = j.at("feature_path").get<std::string>();
      item.record.transcript = j.at("transcript").get<std::string>();
      item.synth_seed = j.at("synth_seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(context + ": bad spec record: " + e.what());
    }
    item.spec = spec_from_json(j.at("spec"), context);
    validate_spec(item.spec);
    cohort.push_back(std::move(item));
  }
  if (cohort.empty()) throw DataError("specs: " + path + " has no rows");
  return cohort;
}

}  // namespace spane
