// core/src/pipeline.cpp

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

#include "spane/pipeline.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <thread>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spane/corpus.hpp"
#include "spane/csv.hpp"
#include "spane/distortion.hpp"
#include "spane/errors.hpp"
#include "spane/feature_table.hpp"
#include "spane/knn.hpp"
#include "spane/privacy.hpp"
#include "spane/prosody.hpp"
#include "spane/synth.hpp"
#include "spane/utility.hpp"
#include "spane/version.hpp"

namespace spane::pipeline {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string json_type_name(const json& v) {
  switch (v.type()) {
    case json::value_t::null: return "null";
    case json::value_t::object: return "an object";
    case json::value_t::array: return "an array";
    case json::value_t::string: return "a string";
    case json::value_t::boolean: return "a boolean";
    case json::value_t::number_integer:
    case json::value_t::number_unsigned: return "an integer";
    case json::value_t::number_float: return "a number";
    default: return "binary";
  }
}

std::string join_path(const std::string& dir, const std::string& p) {
  fs::path q(p);
  if (q.is_absolute()) return q.lexically_normal().string();
  return (fs::path(dir) / q).lexically_normal().string();
}

// JSON config object with typed getters.  Every value read, including
// defaults, is echoed into a shared resolved tree for the run log; keys
// never read are an error so that typos cannot silently fall back to
// defaults.
class Config {
 public:
  static Config load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open config file " + path);
    json object;
    try {
      object = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError("config " + path + ": " + e.what());
    }
    if (!object.is_object()) {
      throw ConfigError("config " + path + ": top level must be an object");
    }
    std::string dir = fs::path(path).parent_path().string();
    if (dir.empty()) dir = ".";
    return Config(std::move(object), std::move(dir), "config",
                  std::make_shared<json>(json::object()),
                  json::json_pointer());
  }

  const std::string& dir() const { return dir_; }
  json resolved() const { return *resolved_root_; }

  bool has(const std::string& key) const { return object_.contains(key); }

  // Injects a command-line override before any key is read.
  void set(const std::string& key, json value) {
    object_[key] = std::move(value);
  }

  std::string get_string(const std::string& key) {
    const json* v = require(key);
    return take_string(key, *v);
  }
  std::string get_string(const std::string& key, const std::string& def) {
    const json* v = fetch(key);
    if (!v) {
      record(key, def);
      return def;
    }
    return take_string(key, *v);
  }

  double get_double(const std::string& key) {
    const json* v = require(key);
    return take_double(key, *v);
  }
  double get_double(const std::string& key, double def) {
    const json* v = fetch(key);
    if (!v) {
      record(key, def);
      return def;
    }
    return take_double(key, *v);
  }

  int get_int(const std::string& key, int def) {
    const json* v = fetch(key);
    if (!v) {
      record(key, def);
      return def;
    }
    if (!v->is_number_integer() && !v->is_number_unsigned()) {
      throw ConfigError(where(key) + " must be an integer, got " +
                        json_type_name(*v));
    }
    record(key, *v);
    return v->get<int>();
  }

  std::uint64_t get_u64(const std::string& key, std::uint64_t def) {
    const json* v = fetch(key);
    if (!v) {
      record(key, def);
      return def;
    }
    return take_u64(key, *v);
  }

  std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                          std::vector<std::uint64_t> def) {
    const json* v = fetch(key);
    if (!v) {
      record(key, def);
      return def;
    }
    if (!v->is_array()) {
      throw ConfigError(where(key) + " must be an array of integers, got " +
                        json_type_name(*v));
    }
    std::vector<std::uint64_t> out;
    for (const json& e : *v) out.push_back(take_u64(key, e));
    record(key, *v);
    return out;
  }

  ParamRange get_range(const std::string& key, ParamRange def) {
    const json* v = fetch(key);
    if (!v) {
      record(key, json::array({def.lo, def.hi}));
      return def;
    }
    if (!v->is_array() || v->size() != 2 || !(*v)[0].is_number() ||
        !(*v)[1].is_number()) {
      throw ConfigError(where(key) + " must be a [lo, hi] number pair");
    }
    record(key, *v);
    return ParamRange{(*v)[0].get<double>(), (*v)[1].get<double>()};
  }

  // Required path, resolved against the config file directory.
  std::string get_path(const std::string& key) {
    std::string resolved = join_path(dir_, get_string(key));
    record(key, resolved);
    return resolved;
  }
  // Optional path with an already-resolved default.
  std::string get_path(const std::string& key,
                       const std::string& resolved_def) {
    const json* v = fetch(key);
    if (!v) {
      record(key, resolved_def);
      return resolved_def;
    }
    std::string resolved = join_path(dir_, take_string(key, *v));
    record(key, resolved);
    return resolved;
  }

  // Nested object; an absent key acts as an empty object so that every
  // default inside it still gets echoed.
  Config sub(const std::string& key) {
    const json* v = fetch(key);
    json object = json::object();
    if (v) {
      if (!v->is_object()) {
        throw ConfigError(where(key) + " must be an object, got " +
                          json_type_name(*v));
      }
      object = *v;
    }
    node()[key] = json::object();
    return Config(std::move(object), dir_, context_ + "." + key,
                  resolved_root_, where_ / key);
  }

  // Required array of objects (possibly empty).
  std::vector<Config> sub_array(const std::string& key) {
    const json* v = require(key);
    if (!v->is_array()) {
      throw ConfigError(where(key) + " must be an array of objects, got " +
                        json_type_name(*v));
    }
    node()[key] = json::array();
    std::vector<Config> out;
    for (std::size_t i = 0; i < v->size(); ++i) {
      const json& e = (*v)[i];
      if (!e.is_object()) {
        throw ConfigError(where(key) + "[" + std::to_string(i) +
                          "] must be an object, got " + json_type_name(e));
      }
      node()[key].push_back(json::object());
      out.push_back(Config(e, dir_,
                           context_ + "." + key + "[" + std::to_string(i) +
                               "]",
                           resolved_root_, where_ / key / i));
    }
    return out;
  }

  // Rejects keys that no getter consumed.
  void finish() const {
    for (const auto& item : object_.items()) {
      if (!used_.count(item.key())) {
        throw ConfigError(context_ + ": unknown key '" + item.key() + "'");
      }
    }
  }

 private:
  Config(json object, std::string dir, std::string context,
         std::shared_ptr<json> resolved_root, json::json_pointer where)
      : object_(std::move(object)),
        dir_(std::move(dir)),
        context_(std::move(context)),
        resolved_root_(std::move(resolved_root)),
        where_(std::move(where)) {}

  std::string where(const std::string& key) const {
    return context_ + ": key '" + key + "'";
  }

  const json* fetch(const std::string& key) {
    auto it = object_.find(key);
    if (it == object_.end()) return nullptr;
    used_.insert(key);
    return &*it;
  }

  const json* require(const std::string& key) {
    const json* v = fetch(key);
    if (!v) throw ConfigError(context_ + ": missing required key '" + key + "'");
    return v;
  }

  json& node() { return (*resolved_root_)[where_]; }

  void record(const std::string& key, json value) {
    node()[key] = std::move(value);
  }

  std::string take_string(const std::string& key, const json& v) {
    if (!v.is_string()) {
      throw ConfigError(where(key) + " must be a string, got " +
                        json_type_name(v));
    }
    record(key, v);
    return v.get<std::string>();
  }

  double take_double(const std::string& key, const json& v) {
    if (!v.is_number()) {
      throw ConfigError(where(key) + " must be a number, got " +
                        json_type_name(v));
    }
    record(key, v);
    return v.get<double>();
  }

  std::uint64_t take_u64(const std::string& key, const json& v) {
    if (v.is_number_unsigned()) {
      record(key, v);
      return v.get<std::uint64_t>();
    }
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
      record(key, v);
      return static_cast<std::uint64_t>(v.get<std::int64_t>());
    }
    throw ConfigError(where(key) + " must be a non-negative integer");
  }

  json object_;
  std::string dir_;
  std::string context_;
  std::shared_ptr<json> resolved_root_;
  json::json_pointer where_;
  std::set<std::string> used_;
};

struct RunContext {
  std::string command;
  std::string out_dir;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::vector<std::pair<std::string, std::uint64_t>> counts;

  void count(const std::string& name, std::uint64_t value) {
    counts.emplace_back(name, value);
  }
  std::string out(const std::string& name) const {
    return (fs::path(out_dir) / name).string();
  }
};

// Runs fn(0..n-1) on up to |jobs| threads; the first exception wins and is
// rethrown after all workers stop.
void parallel_map(std::size_t n, int jobs,
                  const std::function<void(std::size_t)>& fn) {
  if (n == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::mutex mu;
  std::exception_ptr first;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          {
            std::lock_guard<std::mutex> lock(mu);
            if (!first) first = std::current_exception();
          }
          next.store(n);
          return;
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first) std::rethrow_exception(first);
}

std::string manifest_dir(const std::string& manifest_path) {
  std::string dir = fs::path(manifest_path).parent_path().string();
  return dir.empty() ? std::string(".") : dir;
}

FrameMatrix load_features(const UtteranceRecord& rec, const std::string& dir,
                          const char* command) {
  if (rec.feature_path.empty()) {
    throw DataError(std::string(command) + ": utterance '" + rec.id +
                    "' has no feature_path");
  }
  return read_fmat(join_path(dir, rec.feature_path));
}

Waveform load_audio(const UtteranceRecord& rec, const std::string& dir,
                    const char* command) {
  if (rec.audio_path.empty()) {
    throw DataError(std::string(command) + ": utterance '" + rec.id +
                    "' has no audio_path");
  }
  return read_wav(join_path(dir, rec.audio_path));
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path + " for writing");
  out << text;
  if (!out) throw DataError("write failed for " + path);
}

// ---------------------------------------------------------------------------
// synth

void read_group_params(Config& c, CohortGroupParams* p) {
  p->f0_base_male_hz = c.get_range("f0_base_male_hz", p->f0_base_male_hz);
  p->f0_base_female_hz =
      c.get_range("f0_base_female_hz", p->f0_base_female_hz);
  p->f0_var_hz = c.get_range("f0_var_hz", p->f0_var_hz);
  p->tremor_depth_hz = c.get_range("tremor_depth_hz", p->tremor_depth_hz);
  p->jitter_pct = c.get_range("jitter_pct", p->jitter_pct);
  p->breaks_per_s = c.get_range("breaks_per_s", p->breaks_per_s);
  p->pause_duration_s = c.get_range("pause_duration_s", p->pause_duration_s);
  p->pause_count_min = c.get_int("pause_count_min", p->pause_count_min);
  p->pause_count_max = c.get_int("pause_count_max", p->pause_count_max);
  c.finish();
}

DegradationPolicy parse_policy(Config& c) {
  const std::string kind = c.get_string("kind");
  DegradationPolicy policy;
  if (kind == "f0_smooth") {
    policy = f0_smooth(c.get_double("window_s"));
  } else if (kind == "energy_gain") {
    policy = energy_gain(c.get_double("gain_db"));
  } else if (kind == "jitter_remove") {
    policy = jitter_remove();
  } else if (kind == "pause_preserve") {
    policy = pause_preserve();
  } else if (kind == "transcript_resynth") {
    policy = transcript_resynth(c.get_double("target_f0_hz"),
                                c.get_double("uniform_pause_s"));
  } else {
    throw ConfigError(
        "unknown policy kind '" + kind +
        "'; expected f0_smooth, energy_gain, jitter_remove, "
        "pause_preserve, or transcript_resynth");
  }
  c.finish();
  return policy;
}

// Re-renders utterances from a stored spec list with the per-utterance
// synthesis seeds held fixed, applying the policy chain to each render
// plan.  Feature matrices are carried over unchanged.
void synth_degrade(Config& cfg, RunContext& ctx) {
  const std::string specs_path = cfg.get_path("specs");
  std::vector<Config> policy_cfgs = cfg.sub_array("policies");
  std::vector<DegradationPolicy> policies;
  policies.reserve(policy_cfgs.size());
  for (Config& pc : policy_cfgs) policies.push_back(parse_policy(pc));

  const std::vector<CohortUtterance> utts = read_spec_jsonl(specs_path);
  const std::string specs_dir = manifest_dir(specs_path);
  fs::create_directories(ctx.out("wav"));
  fs::create_directories(ctx.out("fmat"));

  std::vector<UtteranceRecord> out_records(utts.size());
  parallel_map(utts.size(), ctx.jobs, [&](std::size_t i) {
    const CohortUtterance& cu = utts[i];
    RenderPlan plan = make_plan(cu.spec);
    for (const DegradationPolicy& p : policies) apply_policy(&plan, p);
    const Waveform wave = render_plan(plan, cu.synth_seed);

    UtteranceRecord rec = cu.record;
    rec.audio_path = "wav/" + rec.id + ".wav";
    write_wav(ctx.out(rec.audio_path), wave);
    if (!cu.record.feature_path.empty()) {
      const FrameMatrix m =
          read_fmat(join_path(specs_dir, cu.record.feature_path));
      rec.feature_path = "fmat/" + rec.id + ".fmat";
      write_fmat(ctx.out(rec.feature_path), m);
    }
    out_records[i] = rec;
  });

  std::sort(out_records.begin(), out_records.end(),
            [](const UtteranceRecord& a, const UtteranceRecord& b) {
              return a.id < b.id;
            });
  write_manifest(ctx.out("manifest.jsonl"), out_records);
  ctx.count("utterances", out_records.size());
  ctx.count("policies", policies.size());
}

void cmd_synth(Config& cfg, RunContext& ctx) {
  if (cfg.has("specs")) {
    synth_degrade(cfg, ctx);
    return;
  }
  CohortConfig cc;
  cc.speakers_per_group = cfg.get_int("speakers_per_group", 10);
  cc.utterances_per_speaker = cfg.get_int("utterances_per_speaker", 4);
  cc.sample_rate = cfg.get_int("sample_rate", 16000);
  cc.duration_s = cfg.get_range("duration_s", cc.duration_s);
  cc.amplitude = cfg.get_range("amplitude", cc.amplitude);
  cc.feature_dim =
      static_cast<std::uint32_t>(cfg.get_int("feature_dim", 16));
  cc.feature_hop_s = cfg.get_double("feature_hop_s", 0.02);
  cc.feature_noise_std = cfg.get_double("feature_noise_std", 0.3);
  cc.seed = ctx.seed;
  Config control = cfg.sub("control");
  read_group_params(control, &cc.control);
  Config parkinson = cfg.sub("parkinson");
  read_group_params(parkinson, &cc.parkinson);

  const std::vector<CohortUtterance> cohort = synth_cohort(cc, ctx.out_dir);
  ctx.count("speakers", 2 * static_cast<std::uint64_t>(cc.speakers_per_group));
  ctx.count("utterances", cohort.size());
}

// ---------------------------------------------------------------------------
// convert

void cmd_convert(Config& cfg, RunContext& ctx) {
  const std::string manifest_path = cfg.get_path("manifest");
  const std::string pool_path = cfg.get_path("pool_manifest", manifest_path);
  const std::string mode = cfg.get_string("mode", "convert");
  const TargetPolicy policy = parse_target_policy(
      cfg.get_string("policy", "same_gender"), "config: key 'policy'");
  const int k = cfg.get_int("k", 4);
  if (k < 1) throw ConfigError("config: key 'k' must be at least 1");
  if (mode != "convert" && mode != "passthrough") {
    throw ConfigError("config: key 'mode' must be convert or passthrough");
  }

  const std::vector<UtteranceRecord> records = load_manifest(manifest_path);
  const std::string src_dir = manifest_dir(manifest_path);
  fs::create_directories(ctx.out("fmat"));

  std::vector<UtteranceRecord> out_records(records.size());
  std::vector<std::size_t> zero_rows(records.size(), 0);
  std::uint64_t pools_built = 0;
  std::uint64_t pool_dropped = 0;

  if (mode == "passthrough") {
    parallel_map(records.size(), ctx.jobs, [&](std::size_t i) {
      const UtteranceRecord& rec = records[i];
      const FrameMatrix out =
          resynthesis_passthrough(load_features(rec, src_dir, "convert"));
      UtteranceRecord updated = rec;
      updated.audio_path.clear();
      updated.feature_path = "fmat/" + rec.id + ".fmat";
      write_fmat(ctx.out(updated.feature_path), out);
      out_records[i] = updated;
    });
  } else {
    const std::vector<UtteranceRecord> pool_records =
        pool_path == manifest_path ? records : load_manifest(pool_path);
    const std::string pool_dir = manifest_dir(pool_path);
    const std::vector<TargetSpeaker> speakers =
        list_target_speakers(pool_records);

    // Target choices are made up front so they depend only on (seed, id),
    // never on processing order.
    std::vector<std::string> targets(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      std::vector<TargetSpeaker> candidates;
      candidates.reserve(speakers.size());
      for (const TargetSpeaker& s : speakers) {
        if (s.speaker != records[i].speaker) candidates.push_back(s);
      }
      targets[i] = select_target(candidates, records[i], policy, ctx.seed);
    }

    std::map<std::string, std::vector<const UtteranceRecord*>> pool_by_speaker;
    for (const UtteranceRecord& rec : pool_records) {
      pool_by_speaker[rec.speaker].push_back(&rec);
    }
    std::set<std::string> needed(targets.begin(), targets.end());
    std::map<std::string, TargetPool> pools;
    for (const std::string& speaker : needed) {
      std::vector<FrameMatrix> mats;
      for (const UtteranceRecord* rec : pool_by_speaker.at(speaker)) {
        mats.push_back(load_features(*rec, pool_dir, "convert"));
      }
      TargetPool pool = build_pool(mats);
      pool_dropped += pool.dropped_zero_rows;
      pools.emplace(speaker, std::move(pool));
      ++pools_built;
    }

    parallel_map(records.size(), ctx.jobs, [&](std::size_t i) {
      const UtteranceRecord& rec = records[i];
      const FrameMatrix src = load_features(rec, src_dir, "convert");
      const ConversionResult res =
          convert(src, pools.at(targets[i]), static_cast<std::uint32_t>(k));
      zero_rows[i] = res.zero_rows;
      UtteranceRecord updated = rec;
      updated.audio_path.clear();
      updated.feature_path = "fmat/" + rec.id + ".fmat";
      write_fmat(ctx.out(updated.feature_path), res.output);
      out_records[i] = updated;
    });

    std::vector<std::pair<std::string, std::string>> assignment;
    assignment.reserve(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      assignment.emplace_back(records[i].id, targets[i]);
    }
    std::sort(assignment.begin(), assignment.end());
    std::string csv_text = csv::join_row({"id", "target"});
    for (const auto& [id, target] : assignment) {
      csv_text += csv::join_row({id, target});
    }
    write_text(ctx.out("targets.csv"), csv_text);
  }

  std::sort(out_records.begin(), out_records.end(),
            [](const UtteranceRecord& a, const UtteranceRecord& b) {
              return a.id < b.id;
            });
  write_manifest(ctx.out("manifest.jsonl"), out_records);

  std::uint64_t zero_total = 0;
  for (std::size_t z : zero_rows) zero_total += z;
  ctx.count("utterances", records.size());
  ctx.count("pools_built", pools_built);
  ctx.count("pool_dropped_rows", pool_dropped);
  ctx.count("source_zero_rows", zero_total);
}

// ---------------------------------------------------------------------------
// features

void cmd_features(Config& cfg, RunContext& ctx) {
  const std::string manifest_path = cfg.get_path("manifest");
  SummaryConfig sc;
  sc.pitch.frame_s = cfg.get_double("frame_s", sc.pitch.frame_s);
  sc.pitch.hop_s = cfg.get_double("hop_s", sc.pitch.hop_s);
  sc.pitch.fmin = cfg.get_double("fmin_hz", sc.pitch.fmin);
  sc.pitch.fmax = cfg.get_double("fmax_hz", sc.pitch.fmax);
  sc.pitch.threshold = cfg.get_double("yin_threshold", sc.pitch.threshold);
  sc.min_pause_s = cfg.get_double("min_pause_s", sc.min_pause_s);

  const std::vector<UtteranceRecord> records = load_manifest(manifest_path);
  const std::string dir = manifest_dir(manifest_path);

  std::vector<std::pair<std::string, AcousticSummary>> rows(records.size());
  parallel_map(records.size(), ctx.jobs, [&](std::size_t i) {
    const Waveform w = load_audio(records[i], dir, "features");
    rows[i] = {records[i].id, summarize(w, sc)};
  });
  std::sort(rows.begin(), rows.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  write_summary_csv(ctx.out("prosody.csv"), rows);

  std::uint64_t no_voicing = 0;
  std::uint64_t no_speech = 0;
  for (const auto& [id, summary] : rows) {
    if (summary.no_voicing) ++no_voicing;
    if (summary.no_speech) ++no_speech;
  }
  ctx.count("utterances", rows.size());
  ctx.count("no_voicing", no_voicing);
  ctx.count("no_speech", no_speech);
}

// ---------------------------------------------------------------------------
// distort

void cmd_distort(Config& cfg, RunContext& ctx) {
  const std::string original_path = cfg.get_path("original");
  const std::string anonymized_path = cfg.get_path("anonymized");
  const int mi_k = cfg.get_int("mi_k", 3);
  if (mi_k < 1) throw ConfigError("config: key 'mi_k' must be at least 1");

  const FeatureTable original = read_feature_table(original_path);
  const FeatureTable anonymized = read_feature_table(anonymized_path);
  const Standardizer standardizer = fit_standardizer(original);
  const DistortionReport report = distortion_report(
      original, anonymized, standardizer, static_cast<std::uint32_t>(mi_k));
  write_distortion_csv(ctx.out("distortion.csv"), report);

  std::uint64_t degenerate = 0;
  for (bool d : standardizer.degenerate) {
    if (d) ++degenerate;
  }
  ctx.count("features", report.rows.size());
  ctx.count("paired_utterances",
            report.rows.empty() ? 0 : report.rows.front().paired);
  ctx.count("degenerate_features", degenerate);
}

// ---------------------------------------------------------------------------
// privacy

void cmd_privacy(Config& cfg, RunContext& ctx) {
  const std::string manifest_path = cfg.get_path("manifest");
  TrialProtocolConfig pc;
  pc.per_speaker_trials = static_cast<std::uint32_t>(
      cfg.get_int("per_speaker_trials", static_cast<int>(pc.per_speaker_trials)));
  pc.per_speaker_enroll = static_cast<std::uint32_t>(
      cfg.get_int("per_speaker_enroll", static_cast<int>(pc.per_speaker_enroll)));
  pc.seed = ctx.seed;

  const std::vector<UtteranceRecord> records = load_manifest(manifest_path);
  const std::string dir = manifest_dir(manifest_path);
  const TrialProtocol protocol = build_protocol(records, pc);
  const std::unordered_set<std::string> split(protocol.split_ids.begin(),
                                              protocol.split_ids.end());

  std::vector<std::vector<std::pair<std::string, std::vector<double>>>>
      partial(records.size());
  parallel_map(records.size(), ctx.jobs, [&](std::size_t i) {
    const UtteranceRecord& rec = records[i];
    const FrameMatrix m = load_features(rec, dir, "privacy");
    if (split.count(rec.id)) {
      const auto [first, second] = split_monologue(m);
      partial[i].emplace_back(rec.id + kSplitSuffixFirst, embed(first));
      partial[i].emplace_back(rec.id + kSplitSuffixSecond, embed(second));
    } else {
      partial[i].emplace_back(rec.id, embed(m));
    }
  });
  EmbeddingMap embeddings;
  for (auto& chunk : partial) {
    for (auto& [id, vec] : chunk) embeddings.emplace(id, std::move(vec));
  }

  const TrialScores scores = score_trials(protocol, embeddings);
  const EerResult pooled = eer(scores.pooled);
  const std::map<Group, EerResult> grouped = intra_eer(scores.per_group);

  std::string csv_text =
      csv::join_row({"group", "eer", "threshold", "n_genuine", "n_impostor"});
  csv_text += csv::join_row(
      {"ALL", csv::format_double(pooled.eer),
       csv::format_double(pooled.threshold),
       std::to_string(scores.pooled.genuine.size()),
       std::to_string(scores.pooled.impostor.size())});
  for (const auto& [group, result] : grouped) {
    const ScoreSet& set = scores.per_group.at(group);
    csv_text += csv::join_row(
        {to_string(group), csv::format_double(result.eer),
         csv::format_double(result.threshold),
         std::to_string(set.genuine.size()),
         std::to_string(set.impostor.size())});
  }
  write_text(ctx.out("privacy.csv"), csv_text);
  write_embedding_csv(ctx.out("embeddings.csv"), embeddings);

  ctx.count("speakers", protocol.speakers.size());
  ctx.count("split_monologues", protocol.split_ids.size());
  ctx.count("trials", protocol.trials.size());
  ctx.count("genuine", scores.pooled.genuine.size());
  ctx.count("impostor", scores.pooled.impostor.size());
}

// ---------------------------------------------------------------------------
// utility

EmbeddingMap table_to_embeddings(const FeatureTable& table,
                                 const std::string& path) {
  EmbeddingMap out;
  out.reserve(table.rows());
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::vector<double> row(table.cols());
    for (std::size_t c = 0; c < table.cols(); ++c) row[c] = table.at(r, c);
    if (!out.emplace(table.ids[r], std::move(row)).second) {
      throw DataError(path + ": duplicate utterance id '" + table.ids[r] +
                      "'");
    }
  }
  return out;
}

void cmd_utility(Config& cfg, RunContext& ctx) {
  const std::string manifest_path = cfg.get_path("manifest");
  const std::string train_path = cfg.get_path("train_features");
  const std::string eval_path = cfg.get_path("eval_features");
  const std::string train_condition = cfg.get_string("train_condition");
  const std::string eval_condition = cfg.get_string("eval_condition");

  CVConfig cv;
  cv.folds = cfg.get_int("folds", cv.folds);
  cv.seeds = cfg.get_u64_list("seeds", cv.seeds);
  Config probe = cfg.sub("probe");
  cv.probe.learning_rate =
      probe.get_double("learning_rate", cv.probe.learning_rate);
  cv.probe.iterations = probe.get_int("iterations", cv.probe.iterations);
  cv.probe.l2 = probe.get_double("l2", cv.probe.l2);
  probe.finish();

  const std::vector<UtteranceRecord> records = load_manifest(manifest_path);
  std::vector<UtteranceExample> examples;
  examples.reserve(records.size());
  for (const UtteranceRecord& rec : records) {
    examples.push_back({rec.id, rec.speaker, rec.group});
  }

  const FeatureTable train_table = read_feature_table(train_path);
  const FeatureTable eval_table = read_feature_table(eval_path);
  if (train_table.columns != eval_table.columns) {
    throw DataError("utility: feature columns of " + train_path + " and " +
                    eval_path + " do not match");
  }
  const EmbeddingMap train_map = table_to_embeddings(train_table, train_path);
  const EmbeddingMap eval_map = table_to_embeddings(eval_table, eval_path);

  const CVReport report = cross_validate(examples, train_map, eval_map,
                                         train_condition, eval_condition, cv);
  write_cv_csv(ctx.out("utility.csv"), {report});

  ctx.count("utterances", examples.size());
  ctx.count("folds", static_cast<std::uint64_t>(cv.folds));
  ctx.count("seeds", cv.seeds.size());
}

// ---------------------------------------------------------------------------
// wer

void cmd_wer(Config& cfg, RunContext& ctx) {
  const std::string ref_path = cfg.get_path("reference");
  const std::string hyp_path = cfg.get_path("hypothesis");
  const std::vector<UtteranceRecord> refs = load_manifest(ref_path);
  const std::vector<UtteranceRecord> hyps = load_manifest(hyp_path);
  std::unordered_map<std::string, const UtteranceRecord*> by_id;
  for (const UtteranceRecord& rec : hyps) by_id.emplace(rec.id, &rec);

  std::vector<WerRow> rows;
  rows.reserve(refs.size());
  std::uint64_t total_tokens = 0;
  for (const UtteranceRecord& ref : refs) {
    if (ref.transcript.empty()) {
      throw DataError("wer: reference utterance '" + ref.id +
                      "' has no transcript");
    }
    auto it = by_id.find(ref.id);
    if (it == by_id.end()) {
      throw DataError("wer: hypothesis manifest lacks utterance '" + ref.id +
                      "'");
    }
    WerRow row;
    row.id = ref.id;
    row.wer = wer(ref.transcript, it->second->transcript);
    row.n_ref_tokens = normalize_tokens(ref.transcript).size();
    rows.push_back(std::move(row));
    total_tokens += rows.back().n_ref_tokens;
  }
  std::sort(rows.begin(), rows.end(),
            [](const WerRow& a, const WerRow& b) { return a.id < b.id; });
  write_wer_csv(ctx.out("wer.csv"), rows);
  ctx.count("utterances", rows.size());
  ctx.count("reference_tokens", total_tokens);
}

// ---------------------------------------------------------------------------
// report

std::vector<std::vector<std::string>> read_csv(
    const std::string& path, const std::vector<std::string>& header) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("report: cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields =
        csv::split_row(line, path + ":" + std::to_string(line_no));
    if (line_no == 1) {
      if (fields != header) {
        throw DataError("report: " + path + " has an unexpected header");
      }
      continue;
    }
    if (fields.size() != header.size()) {
      throw DataError("report: " + path + ":" + std::to_string(line_no) +
                      ": expected " + std::to_string(header.size()) +
                      " fields, got " + std::to_string(fields.size()));
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

void cmd_report(Config& cfg, RunContext& ctx) {
  const bool has_privacy = cfg.has("privacy");
  const bool has_utility = cfg.has("utility");
  const bool has_distortion = cfg.has("distortion");
  const bool has_wer = cfg.has("wer");
  if (!has_privacy && !has_utility && !has_distortion && !has_wer) {
    throw ConfigError(
        "config: report needs at least one input among privacy, utility, "
        "distortion, wer");
  }

  // source, name, value triples in fixed input order.
  std::vector<std::array<std::string, 3>> summary;
  std::uint64_t inputs = 0;

  if (has_privacy) {
    ++inputs;
    const auto rows =
        read_csv(cfg.get_path("privacy"),
                 {"group", "eer", "threshold", "n_genuine", "n_impostor"});
    for (const auto& row : rows) {
      summary.push_back({"privacy", "eer_" + row[0], row[1]});
      summary.push_back({"privacy", "threshold_" + row[0], row[2]});
    }
  }
  if (has_utility) {
    ++inputs;
    const auto rows = read_csv(cfg.get_path("utility"),
                               {"train_cond", "eval_cond", "fold", "seed", "f1"});
    for (const auto& row : rows) {
      if (row[2] == "all" && row[3] == "all") {
        summary.push_back(
            {"utility", "f1_" + row[0] + "_to_" + row[1], row[4]});
      }
    }
  }
  if (has_wer) {
    ++inputs;
    const auto rows =
        read_csv(cfg.get_path("wer"), {"id", "wer", "n_ref_tokens"});
    double weighted = 0.0;
    double tokens = 0.0;
    for (const auto& row : rows) {
      const double w = csv::parse_double(row[1], "report: wer value");
      const double n = csv::parse_double(row[2], "report: wer token count");
      weighted += w * n;
      tokens += n;
    }
    summary.push_back(
        {"wer", "wer_avg",
         csv::format_double(tokens > 0.0 ? weighted / tokens : 0.0)});
    summary.push_back({"wer", "utterances", std::to_string(rows.size())});
  }

  std::vector<std::array<std::string, 3>> plot;
  if (has_distortion) {
    ++inputs;
    const auto rows =
        read_csv(cfg.get_path("distortion"), {"feature", "emd", "mi", "n"});
    if (rows.empty()) {
      throw DataError("report: distortion input has no feature rows");
    }
    double emd_mean = 0.0;
    double emd_max = 0.0;
    double mi_mean = 0.0;
    double mi_max = 0.0;
    std::vector<std::pair<double, std::size_t>> order;
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double emd = csv::parse_double(rows[i][1], "report: emd value");
      const double mi = csv::parse_double(rows[i][2], "report: mi value");
      emd_mean += emd;
      mi_mean += mi;
      emd_max = std::max(emd_max, emd);
      mi_max = std::max(mi_max, mi);
      order.emplace_back(emd, i);
    }
    emd_mean /= static_cast<double>(rows.size());
    mi_mean /= static_cast<double>(rows.size());
    std::sort(order.begin(), order.end(),
              [&](const auto& a, const auto& b) {
                if (a.first != b.first) return a.first > b.first;
                return rows[a.second][0] < rows[b.second][0];
              });
    for (const auto& [emd, i] : order) {
      plot.push_back({rows[i][0], rows[i][1], rows[i][2]});
    }
    summary.push_back(
        {"distortion", "emd_mean", csv::format_double(emd_mean)});
    summary.push_back({"distortion", "emd_max", csv::format_double(emd_max)});
    summary.push_back({"distortion", "mi_mean", csv::format_double(mi_mean)});
    summary.push_back({"distortion", "mi_max", csv::format_double(mi_max)});
  }

  std::string summary_text = csv::join_row({"source", "name", "value"});
  std::string aggregates_text;
  for (const auto& [source, name, value] : summary) {
    summary_text += csv::join_row({source, name, value});
    aggregates_text += source + "." + name + "=" + value + "\n";
  }
  write_text(ctx.out("summary.csv"), summary_text);
  write_text(ctx.out("aggregates.txt"), aggregates_text);
  if (has_distortion) {
    std::string plot_text = csv::join_row({"feature", "emd", "mi"});
    for (const auto& [feature, emd, mi] : plot) {
      plot_text += csv::join_row({feature, emd, mi});
    }
    write_text(ctx.out("plot.csv"), plot_text);
  }

  ctx.count("inputs", inputs);
  ctx.count("summary_rows", summary.size());
}

// ---------------------------------------------------------------------------

void write_run_log(const RunContext& ctx, const json& resolved) {
  std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char stamp[32];
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm);

  std::string text;
  text += "spane-kit run log\n";
  text += "timestamp: " + std::string(stamp) + "\n";
  text += "command: " + ctx.command + "\n";
  text += "versions: core=" + std::string(kVersion) + " fmat=1\n";
  text += "config: " + resolved.dump(2) + "\n";
  text += "counts:\n";
  for (const auto& [name, value] : ctx.counts) {
    text += "  " + name + ": " + std::to_string(value) + "\n";
  }
  write_text(ctx.out(ctx.command + ".run.log"), text);
}

}  // namespace

void run(const RunOptions& options) {
  static const std::set<std::string> kCommands = {
      "synth", "convert", "features", "distort",
      "privacy", "utility", "wer", "report"};
  if (!kCommands.count(options.command)) {
    throw ConfigError("unknown command '" + options.command +
                      "'; expected one of " + kCommandList);
  }

  Config cfg = Config::load(options.config_path);
  if (options.seed) cfg.set("seed", *options.seed);
  if (options.out_dir) {
    cfg.set("out_dir",
            fs::absolute(*options.out_dir).lexically_normal().string());
  }
  if (options.jobs) cfg.set("jobs", *options.jobs);

  RunContext ctx;
  ctx.command = options.command;
  ctx.seed = cfg.get_u64("seed", 0);
  ctx.out_dir = cfg.get_path("out_dir");
  const int default_jobs =
      std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
  ctx.jobs = cfg.get_int("jobs", default_jobs);
  if (ctx.jobs < 1) throw ConfigError("config: key 'jobs' must be at least 1");
  fs::create_directories(ctx.out_dir);

  if (options.command == "synth") {
    cmd_synth(cfg, ctx);
  } else if (options.command == "convert") {
    cmd_convert(cfg, ctx);
  } else if (options.command == "features") {
    cmd_features(cfg, ctx);
  } else if (options.command == "distort") {
    cmd_distort(cfg, ctx);
  } else if (options.command == "privacy") {
    cmd_privacy(cfg, ctx);
  } else if (options.command == "utility") {
    cmd_utility(cfg, ctx);
  } else if (options.command == "wer") {
    cmd_wer(cfg, ctx);
  } else {
    cmd_report(cfg, ctx);
  }
  cfg.finish();
  write_run_log(ctx, cfg.resolved());
}

}  // namespace spane::pipeline
