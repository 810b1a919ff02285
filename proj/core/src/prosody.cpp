// core/src/prosody.cpp

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

#include "spane/prosody.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <optional>

#include "spane/csv.hpp"

namespace spane {

namespace {

struct Framing {
  std::size_t frame_len = 0;
  std::size_t hop_len = 0;
  std::size_t count = 0;
};

Framing make_framing(const Waveform& w, double frame_s, double hop_s) {
  if (w.sample_rate <= 0) throw DataError("framing: non-positive sample rate");
  if (frame_s <= 0.0 || hop_s <= 0.0) {
    throw ConfigError("framing: frame_s and hop_s must be positive");
  }
  Framing f;
  f.frame_len = static_cast<std::size_t>(std::lround(frame_s * w.sample_rate));
  f.hop_len = static_cast<std::size_t>(std::lround(hop_s * w.sample_rate));
  if (f.frame_len < 2 || f.hop_len < 1) {
    throw ConfigError("framing: frame or hop shorter than the sample grid");
  }
  if (w.samples.size() < f.frame_len) {
    throw DataError("framing: waveform of " +
                    std::to_string(w.samples.size()) +
                    " samples is shorter than one frame");
  }
  f.count = 1 + (w.samples.size() - f.frame_len) / f.hop_len;
  return f;
}

double frame_energy_db(const float* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    acc += static_cast<double>(x[i]) * x[i];
  }
  return 10.0 * std::log10(acc / n + 1e-10);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Relative silence floor from the energies of frames above the absolute
// gate; empty when the whole signal sits below the gate.
std::optional<double> silence_floor(const std::vector<double>& energy_db) {
  std::vector<double> gated;
  for (double e : energy_db) {
    if (e > kAbsoluteSpeechGateDb) gated.push_back(e);
  }
  if (gated.empty()) return std::nullopt;
  return median(std::move(gated)) - kSilenceFloorDropDb;
}

double parabolic_offset(double ym, double y0, double yp) {
  const double denom = ym - 2.0 * y0 + yp;
  if (std::abs(denom) < 1e-30) return 0.0;
  const double delta = 0.5 * (ym - yp) / denom;
  return std::clamp(delta, -0.5, 0.5);
}

struct PopulationStats {
  double mean = 0.0;
  double std = 0.0;
};

PopulationStats population_stats(const std::vector<double>& v) {
  PopulationStats s;
  if (v.empty()) return s;
  for (double x : v) s.mean += x;
  s.mean /= v.size();
  double var = 0.0;
  for (double x : v) var += (x - s.mean) * (x - s.mean);
  s.std = std::sqrt(var / v.size());
  return s;
}

}  // namespace

std::vector<double> energy_track(const Waveform& w, double frame_s,
                                 double hop_s) {
  const Framing f = make_framing(w, frame_s, hop_s);
  std::vector<double> out(f.count);
  for (std::size_t t = 0; t < f.count; ++t) {
    out[t] = frame_energy_db(w.samples.data() + t * f.hop_len, f.frame_len);
  }
  return out;
}

F0Track f0_track(const Waveform& w, const PitchConfig& cfg) {
  if (cfg.fmin <= 0.0 || cfg.fmin >= cfg.fmax) {
    throw ConfigError("pitch: need 0 < fmin < fmax");
  }
  if (w.sample_rate < 4.0 * cfg.fmax) {
    throw ConfigError("pitch: sample rate " + std::to_string(w.sample_rate) +
                      " below 4*fmax");
  }
  const Framing f = make_framing(w, cfg.frame_s, cfg.hop_s);
  const double sr = w.sample_rate;
  const std::size_t tau_min =
      std::max<std::size_t>(1, static_cast<std::size_t>(sr / cfg.fmax));
  const std::size_t tau_max =
      static_cast<std::size_t>(std::ceil(sr / cfg.fmin));
  if (tau_max + 16 > f.frame_len) {
    throw ConfigError("pitch: frame too short for fmin " +
                      std::to_string(cfg.fmin));
  }
  const std::size_t width = f.frame_len - tau_max;

  std::vector<double> energy(f.count);
  for (std::size_t t = 0; t < f.count; ++t) {
    energy[t] = frame_energy_db(w.samples.data() + t * f.hop_len, f.frame_len);
  }
  const std::optional<double> floor = silence_floor(energy);

  F0Track track;
  track.frame_s = cfg.frame_s;
  track.hop_s = cfg.hop_s;
  track.f0.assign(f.count, 0.0);
  track.voiced.assign(f.count, false);
  if (!floor) return track;

  std::vector<double> diff(tau_max + 1, 0.0);
  std::vector<double> cmn(tau_max + 1, 1.0);
  for (std::size_t t = 0; t < f.count; ++t) {
    if (energy[t] < *floor) continue;
    const float* x = w.samples.data() + t * f.hop_len;

    for (std::size_t tau = 1; tau <= tau_max; ++tau) {
      double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
      std::size_t j = 0;
      for (; j + 4 <= width; j += 4) {
        const double d0 = static_cast<double>(x[j]) - x[j + tau];
        const double d1 = static_cast<double>(x[j + 1]) - x[j + 1 + tau];
        const double d2 = static_cast<double>(x[j + 2]) - x[j + 2 + tau];
        const double d3 = static_cast<double>(x[j + 3]) - x[j + 3 + tau];
        acc0 += d0 * d0;
        acc1 += d1 * d1;
        acc2 += d2 * d2;
        acc3 += d3 * d3;
      }
      for (; j < width; ++j) {
        const double d = static_cast<double>(x[j]) - x[j + tau];
        acc0 += d * d;
      }
      diff[tau] = (acc0 + acc1) + (acc2 + acc3);
    }

    double running = 0.0;
    for (std::size_t tau = 1; tau <= tau_max; ++tau) {
      running += diff[tau];
      cmn[tau] = running > 1e-12 ? diff[tau] * tau / running : 1.0;
    }

    std::size_t dip = 0;
    for (std::size_t tau = tau_min; tau <= tau_max; ++tau) {
      if (cmn[tau] < cfg.threshold) {
        dip = tau;
        while (dip + 1 <= tau_max && cmn[dip + 1] < cmn[dip]) ++dip;
        break;
      }
    }
    if (dip == 0) continue;

    double refined = static_cast<double>(dip);
    if (dip > 1 && dip < tau_max) {
      refined += parabolic_offset(cmn[dip - 1], cmn[dip], cmn[dip + 1]);
    }
    track.f0[t] = std::clamp(sr / refined, cfg.fmin, cfg.fmax);
    track.voiced[t] = true;
  }
  return track;
}

PauseSegmentation segment_pauses(const std::vector<double>& energy_db,
                                 const std::vector<bool>& voiced,
                                 double frame_s, double hop_s,
                                 double min_pause_s) {
  if (energy_db.size() != voiced.size()) {
    throw DataError("pauses: energy and voicing tracks differ in length");
  }
  if (energy_db.empty()) throw DataError("pauses: empty tracks");
  if (frame_s <= 0.0 || hop_s <= 0.0 || min_pause_s <= 0.0) {
    throw ConfigError("pauses: durations must be positive");
  }

  PauseSegmentation seg;
  seg.silent.assign(energy_db.size(), true);
  const std::optional<double> floor = silence_floor(energy_db);
  if (!floor) {
    seg.no_speech = true;
    return seg;
  }
  seg.silence_floor_db = *floor;
  for (std::size_t t = 0; t < energy_db.size(); ++t) {
    seg.silent[t] = energy_db[t] < *floor && !voiced[t];
  }

  std::size_t first = energy_db.size(), last = 0;
  for (std::size_t t = 0; t < seg.silent.size(); ++t) {
    if (!seg.silent[t]) {
      first = std::min(first, t);
      last = t;
    }
  }
  if (first == energy_db.size()) {
    seg.no_speech = true;
    return seg;
  }
  seg.speech_begin = first;
  seg.speech_end = last + 1;

  std::size_t run_begin = 0;
  bool in_run = false;
  for (std::size_t t = seg.speech_begin; t < seg.speech_end; ++t) {
    if (seg.silent[t] && !in_run) {
      run_begin = t;
      in_run = true;
    }
    if (!seg.silent[t] && in_run) {
      in_run = false;
      const std::size_t len = t - run_begin;
      const double dur = (len - 1) * hop_s + frame_s;
      if (dur >= min_pause_s) {
        seg.pauses.push_back({run_begin, t, dur});
      }
    }
  }
  // Region bounds are non-silent, so no run is left open here.
  return seg;
}

JitterStats jitter_stats(const F0Track& track) {
  std::vector<double> periods;
  std::vector<double> samples;
  double prev_period = 0.0;
  bool have_prev = false;
  for (std::size_t t = 0; t < track.f0.size(); ++t) {
    if (!track.voiced[t] || track.f0[t] <= 0.0) {
      have_prev = false;
      continue;
    }
    const double period = 1.0 / track.f0[t];
    periods.push_back(period);
    if (have_prev) samples.push_back(std::abs(period - prev_period));
    prev_period = period;
    have_prev = true;
  }
  if (samples.empty()) return {};
  double mean_period = 0.0;
  for (double p : periods) mean_period += p;
  mean_period /= periods.size();
  if (mean_period <= 0.0) return {};

  for (double& s : samples) s /= mean_period;
  const PopulationStats st = population_stats(samples);
  return {st.mean, st.std, true};
}

std::vector<std::vector<double>> period_runs(const Waveform& w,
                                             const F0Track& track) {
  std::vector<std::vector<double>> runs;
  if (w.sample_rate <= 0) throw DataError("periods: non-positive sample rate");
  const double sr = w.sample_rate;
  const std::size_t n = w.samples.size();

  // Sub-sample peak of sign * x over [lo, hi), parabolic refinement.  The
  // sign is fixed per run: an odd-symmetric pulse has equal-height positive
  // and negative extrema per period, and tracking |x| would hop between the
  // two families, which reads as spurious period variation.
  auto peak_at = [&](std::size_t lo, std::size_t hi, double sign) -> double {
    std::size_t best = lo;
    double best_v = -1e300;
    for (std::size_t i = lo; i < hi; ++i) {
      const double v = sign * static_cast<double>(w.samples[i]);
      if (v > best_v) {
        best_v = v;
        best = i;
      }
    }
    double pos = static_cast<double>(best);
    if (best > 0 && best + 1 < n) {
      const double ym = sign * static_cast<double>(w.samples[best - 1]);
      const double yp = sign * static_cast<double>(w.samples[best + 1]);
      pos += parabolic_offset(-ym, -best_v, -yp);
    }
    return pos / sr;
  };

  // Upward zero crossing of sign * x nearest before a peak, linearly
  // interpolated.  A peak sits a fixed phase into its period, so peak
  // spacing blends adjacent period lengths; the crossing marks the period
  // onset and recovers each length exactly.  Amplitude envelopes do not
  // move it either.  Falls back to the peak when no crossing is found.
  auto mark_before = [&](double peak_time, double period,
                         double sign) -> double {
    const std::size_t p = std::min(
        n - 1, static_cast<std::size_t>(std::lround(peak_time * sr)));
    const std::size_t span =
        static_cast<std::size_t>(std::lround(0.5 * period * sr));
    const std::size_t stop = p > span ? p - span : 1;
    for (std::size_t i = p; i >= stop && i > 0; --i) {
      const double y1 = sign * static_cast<double>(w.samples[i]);
      const double y0 = sign * static_cast<double>(w.samples[i - 1]);
      if (y0 <= 0.0 && y1 > 0.0) {
        const double frac = y1 == y0 ? 0.0 : -y0 / (y1 - y0);
        return (static_cast<double>(i - 1) + frac) / sr;
      }
    }
    return peak_time;
  };

  std::size_t t = 0;
  while (t < track.voiced.size()) {
    if (!track.voiced[t]) {
      ++t;
      continue;
    }
    std::size_t run_end = t;
    while (run_end + 1 < track.voiced.size() && track.voiced[run_end + 1]) {
      ++run_end;
    }

    const double run_end_time =
        std::min(run_end * track.hop_s + track.frame_s,
                 static_cast<double>(n) / sr);
    std::vector<double> periods;
    const double t0 = t * track.hop_s;
    const double first_period = 1.0 / track.f0[t];
    const std::size_t s_lo = static_cast<std::size_t>(std::lround(t0 * sr));
    const std::size_t s_hi = std::min(
        n, static_cast<std::size_t>(std::lround((t0 + first_period) * sr)));
    if (s_lo + 2 < s_hi) {
      std::size_t first = s_lo;
      double first_v = -1.0;
      for (std::size_t i = s_lo; i < s_hi; ++i) {
        const double v = std::abs(static_cast<double>(w.samples[i]));
        if (v > first_v) {
          first_v = v;
          first = i;
        }
      }
      const double sign = w.samples[first] < 0.0f ? -1.0 : 1.0;
      double epoch = peak_at(s_lo, s_hi, sign);
      double mark = mark_before(epoch, first_period, sign);
      const std::size_t max_steps =
          static_cast<std::size_t>((run_end_time - t0) / first_period * 2) + 16;
      for (std::size_t step = 0; step < max_steps; ++step) {
        const double frame_center = (epoch - track.frame_s / 2.0) / track.hop_s;
        const std::size_t fi = std::clamp(
            static_cast<std::size_t>(std::lround(std::max(0.0, frame_center))),
            t, run_end);
        const double period = 1.0 / track.f0[fi];
        const double lo_t = epoch + 0.7 * period;
        const double hi_t = epoch + 1.3 * period;
        if (hi_t >= run_end_time) break;
        const std::size_t lo = static_cast<std::size_t>(std::lround(lo_t * sr));
        const std::size_t hi =
            std::min(n, static_cast<std::size_t>(std::lround(hi_t * sr)));
        if (lo + 2 >= hi) break;
        const double next = peak_at(lo, hi, sign);
        const double measured = next - epoch;
        if (measured < 0.6 * period || measured > 1.4 * period) break;
        const double next_mark = mark_before(next, period, sign);
        periods.push_back(next_mark - mark);
        epoch = next;
        mark = next_mark;
      }
    }
    if (!periods.empty()) runs.push_back(std::move(periods));
    t = run_end + 1;
  }
  return runs;
}

JitterStats jitter_from_periods(
    const std::vector<std::vector<double>>& runs) {
  std::vector<double> samples;
  double mean_period = 0.0;
  std::size_t n_periods = 0;
  for (const auto& run : runs) {
    for (double p : run) {
      mean_period += p;
      ++n_periods;
    }
    for (std::size_t i = 1; i < run.size(); ++i) {
      samples.push_back(std::abs(run[i] - run[i - 1]));
    }
  }
  if (samples.empty() || n_periods == 0) return {};
  mean_period /= n_periods;
  if (mean_period <= 0.0) return {};

  for (double& s : samples) s /= mean_period;
  const PopulationStats st = population_stats(samples);
  return {st.mean, st.std, true};
}

std::vector<double> summary_values(const AcousticSummary& s) {
  return {s.f0_avg,        s.f0_std,        s.f0_deriv_avg, s.energy_avg,
          s.energy_std,    s.pause_dur_avg, s.pause_dur_std, s.pause_count,
          s.unvoiced_ratio, s.jitter_avg,   s.jitter_std};
}

AcousticSummary summarize(const Waveform& w, const SummaryConfig& cfg) {
  const F0Track track = f0_track(w, cfg.pitch);
  const std::vector<double> energy =
      energy_track(w, cfg.pitch.frame_s, cfg.pitch.hop_s);
  const PauseSegmentation seg = segment_pauses(
      energy, track.voiced, cfg.pitch.frame_s, cfg.pitch.hop_s,
      cfg.min_pause_s);

  AcousticSummary out;
  out.no_speech = seg.no_speech;

  std::vector<double> voiced_f0;
  for (std::size_t t = 0; t < track.f0.size(); ++t) {
    if (track.voiced[t]) voiced_f0.push_back(track.f0[t]);
  }
  out.no_voicing = voiced_f0.empty();
  if (!out.no_voicing) {
    const PopulationStats f0s = population_stats(voiced_f0);
    out.f0_avg = f0s.mean;
    out.f0_std = f0s.std;

    // Frames at voiced-run edges see half-silent analysis windows and
    // carry biased estimates; the derivative uses run-interior frames only.
    const auto interior = [&](std::size_t t) {
      return t > 0 && t + 1 < track.voiced.size() && track.voiced[t] &&
             track.voiced[t - 1] && track.voiced[t + 1];
    };
    std::vector<double> derivs;
    for (std::size_t t = 1; t < track.f0.size(); ++t) {
      if (interior(t - 1) && interior(t)) {
        derivs.push_back(std::abs(track.f0[t] - track.f0[t - 1]));
      }
    }
    if (!derivs.empty()) out.f0_deriv_avg = population_stats(derivs).mean;

    const JitterStats jitter = jitter_from_periods(period_runs(w, track));
    out.jitter_avg = jitter.avg;
    out.jitter_std = jitter.std;
  }

  if (!seg.no_speech) {
    std::vector<double> speech_energy;
    std::size_t unvoiced = 0;
    for (std::size_t t = seg.speech_begin; t < seg.speech_end; ++t) {
      if (!seg.silent[t]) speech_energy.push_back(energy[t]);
      if (!track.voiced[t]) ++unvoiced;
    }
    const PopulationStats es = population_stats(speech_energy);
    out.energy_avg = es.mean;
    out.energy_std = es.std;
    out.unvoiced_ratio =
        static_cast<double>(unvoiced) / (seg.speech_end - seg.speech_begin);
  } else {
    out.energy_avg = kEnergyFloorDb;
  }

  out.pause_count = static_cast<double>(seg.pauses.size());
  if (!seg.pauses.empty()) {
    std::vector<double> durations;
    for (const auto& p : seg.pauses) durations.push_back(p.duration_s);
    const PopulationStats ps = population_stats(durations);
    out.pause_dur_avg = ps.mean;
    out.pause_dur_std = ps.std;
  }
  return out;
}

void write_summary_csv(
    const std::string& path,
    const std::vector<std::pair<std::string, AcousticSummary>>& rows) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("summary csv: cannot open " + path);
  std::vector<std::string> header;
  header.push_back("id");
  for (const char* name : kSummaryFeatureNames) header.push_back(name);
  header.push_back("flags");
  out << csv::join_row(header);

  for (const auto& [id, summary] : rows) {
    std::vector<std::string> row;
    row.push_back(id);
    for (double v : summary_values(summary)) {
      row.push_back(csv::format_double(v));
    }
    std::string flags;
    if (summary.no_voicing) flags = "no_voicing";
    if (summary.no_speech) {
      if (!flags.empty()) flags += ';';
      flags += "no_speech";
    }
    row.push_back(flags);
    out << csv::join_row(row);
  }
  if (!out) throw DataError("summary csv: write failed for " + path);
}

}  // namespace spane
