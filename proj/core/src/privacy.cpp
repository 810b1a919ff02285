// core/src/privacy.cpp

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

#include "spane/privacy.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "spane/csv.hpp"
#include "spane/rng.hpp"

namespace spane {

std::vector<double> embed(const FrameMatrix& m) {
  const std::uint32_t d = m.dim;
  std::vector<double> mean(d, 0.0);
  for (std::uint32_t t = 0; t < m.frames; ++t) {
    const float* row = m.row(t);
    for (std::uint32_t i = 0; i < d; ++i) mean[i] += row[i];
  }
  for (std::uint32_t i = 0; i < d; ++i) mean[i] /= m.frames;

  std::vector<double> var(d, 0.0);
  for (std::uint32_t t = 0; t < m.frames; ++t) {
    const float* row = m.row(t);
    for (std::uint32_t i = 0; i < d; ++i) {
      const double diff = row[i] - mean[i];
      var[i] += diff * diff;
    }
  }

  std::vector<double> v(2 * std::size_t(d));
  for (std::uint32_t i = 0; i < d; ++i) {
    v[i] = mean[i];
    v[d + i] = std::sqrt(var[i] / m.frames);
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm < 1e-12) {
    throw DataError("embed: zero embedding (all-zero frame matrix)");
  }
  for (double& x : v) x /= norm;
  return v;
}

std::pair<FrameMatrix, FrameMatrix> split_monologue(const FrameMatrix& m) {
  if (m.frames < 2) {
    throw DataError("split: monologue needs at least two frames to halve");
  }
  const std::uint32_t half = m.frames / 2;
  FrameMatrix first;
  first.frames = half;
  first.dim = m.dim;
  first.hop_s = m.hop_s;
  first.data.assign(m.data.begin(),
                    m.data.begin() + std::size_t(half) * m.dim);
  FrameMatrix second;
  second.frames = m.frames - half;
  second.dim = m.dim;
  second.hop_s = m.hop_s;
  second.data.assign(m.data.begin() + std::size_t(half) * m.dim,
                     m.data.end());
  return {std::move(first), std::move(second)};
}

TrialProtocol build_protocol(const std::vector<UtteranceRecord>& records,
                             const TrialProtocolConfig& cfg) {
  if (cfg.per_speaker_trials < 1 || cfg.per_speaker_enroll < 1) {
    throw ConfigError("protocol: per-speaker caps must be at least 1");
  }

  // Speakers in first-appearance order, utterances in record order.
  std::vector<std::string> speaker_order;
  std::unordered_map<std::string, std::vector<const UtteranceRecord*>> by_speaker;
  std::unordered_map<std::string, Group> speaker_group;
  for (const auto& rec : records) {
    auto [it, inserted] = by_speaker.try_emplace(rec.speaker);
    if (inserted) {
      speaker_order.push_back(rec.speaker);
      speaker_group[rec.speaker] = rec.group;
    } else if (speaker_group[rec.speaker] != rec.group) {
      throw DataError("protocol: speaker '" + rec.speaker +
                      "' appears in both groups");
    }
    it->second.push_back(&rec);
  }
  if (speaker_order.size() < 2) {
    throw DataError("protocol: need at least two speakers, got " +
                    std::to_string(speaker_order.size()));
  }

  TrialProtocol protocol;
  for (const auto& name : speaker_order) {
    const auto& utts = by_speaker[name];
    SpeakerSets sets;
    sets.speaker = name;
    sets.group = speaker_group[name];
    if (utts.size() == 1) {
      const UtteranceRecord* rec = utts.front();
      if (rec->task != Task::kMonologue) {
        throw DataError("protocol: speaker '" + name +
                        "' has a single non-monologue utterance; cannot "
                        "form both enrollment and trial sides");
      }
      sets.enroll_ids.push_back(rec->id + kSplitSuffixFirst);
      sets.trial_ids.push_back(rec->id + kSplitSuffixSecond);
      protocol.split_ids.push_back(rec->id);
    } else {
      std::vector<std::string> ids;
      ids.reserve(utts.size());
      for (const auto* rec : utts) ids.push_back(rec->id);
      Rng rng(derived_seed(cfg.seed, name));
      rng.shuffle(ids);
      const std::size_t n = ids.size();
      const std::size_t n_trial =
          std::min<std::size_t>((n + 1) / 2, cfg.per_speaker_trials);
      const std::size_t n_enroll =
          std::min<std::size_t>(n - n_trial, cfg.per_speaker_enroll);
      sets.trial_ids.assign(ids.begin(), ids.begin() + n_trial);
      sets.enroll_ids.assign(ids.begin() + n_trial,
                             ids.begin() + n_trial + n_enroll);
    }
    protocol.speakers.push_back(std::move(sets));
  }

  for (const auto& trial_side : protocol.speakers) {
    for (const auto& utt : trial_side.trial_ids) {
      for (const auto& claimed : protocol.speakers) {
        Trial t;
        t.trial_id = utt;
        t.trial_speaker = trial_side.speaker;
        t.claimed_speaker = claimed.speaker;
        t.same_speaker = trial_side.speaker == claimed.speaker;
        t.trial_group = trial_side.group;
        t.claimed_group = claimed.group;
        protocol.trials.push_back(std::move(t));
      }
    }
  }
  return protocol;
}

namespace {

const std::vector<double>& lookup_embedding(const EmbeddingMap& embeddings,
                                            const std::string& id) {
  auto it = embeddings.find(id);
  if (it == embeddings.end()) {
    throw DataError("scoring: no embedding for utterance '" + id + "'");
  }
  return it->second;
}

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) {
    throw DataError("scoring: embedding dimension mismatch (" +
                    std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  if (denom < 1e-300) throw DataError("scoring: zero-norm embedding");
  return dot / denom;
}

}  // namespace

TrialScores score_trials(const TrialProtocol& protocol,
                         const EmbeddingMap& embeddings) {
  // Enrollment model per speaker: L2-normalized mean of enrollments.
  std::unordered_map<std::string, std::vector<double>> models;
  for (const auto& sets : protocol.speakers) {
    if (sets.enroll_ids.empty()) {
      throw DataError("scoring: speaker '" + sets.speaker +
                      "' has no enrollment utterances");
    }
    std::vector<double> model;
    for (const auto& id : sets.enroll_ids) {
      const auto& e = lookup_embedding(embeddings, id);
      if (model.empty()) {
        model = e;
      } else {
        if (model.size() != e.size()) {
          throw DataError("scoring: embedding dimension mismatch for '" + id +
                          "'");
        }
        for (std::size_t i = 0; i < e.size(); ++i) model[i] += e[i];
      }
    }
    double norm = 0.0;
    for (double& v : model) {
      v /= sets.enroll_ids.size();
      norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
      throw DataError("scoring: zero enrollment model for speaker '" +
                      sets.speaker + "'");
    }
    for (double& v : model) v /= norm;
    models[sets.speaker] = std::move(model);
  }

  TrialScores scores;
  for (const auto& t : protocol.trials) {
    const double s =
        cosine(lookup_embedding(embeddings, t.trial_id), models[t.claimed_speaker]);
    auto& pooled =
        t.same_speaker ? scores.pooled.genuine : scores.pooled.impostor;
    pooled.push_back(s);
    if (t.trial_group == t.claimed_group) {
      auto& set = scores.per_group[t.trial_group];
      (t.same_speaker ? set.genuine : set.impostor).push_back(s);
    }
  }
  return scores;
}

EerResult eer(const ScoreSet& scores) {
  if (scores.genuine.empty() || scores.impostor.empty()) {
    throw DataError("eer: needs both genuine and impostor scores");
  }
  std::vector<double> gen = scores.genuine;
  std::vector<double> imp = scores.impostor;
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());

  std::vector<double> sweep;
  sweep.reserve(gen.size() + imp.size() + 1);
  sweep.insert(sweep.end(), gen.begin(), gen.end());
  sweep.insert(sweep.end(), imp.begin(), imp.end());
  std::sort(sweep.begin(), sweep.end());
  sweep.erase(std::unique(sweep.begin(), sweep.end()), sweep.end());
  // Sentinel above all scores: FAR 0, FRR 1, so a crossing always exists.
  sweep.push_back(sweep.back() + 1.0);

  const double ng = static_cast<double>(gen.size());
  const double ni = static_cast<double>(imp.size());
  double prev_far = 1.0, prev_frr = 0.0, prev_t = sweep.front();
  bool have_prev = false;
  for (double t : sweep) {
    // FAR: impostor scores at or above t.  FRR: genuine scores below t.
    const double far =
        static_cast<double>(imp.end() -
                            std::lower_bound(imp.begin(), imp.end(), t)) /
        ni;
    const double frr =
        static_cast<double>(std::lower_bound(gen.begin(), gen.end(), t) -
                            gen.begin()) /
        ng;
    const double diff = far - frr;
    if (diff <= 0.0) {
      if (diff == 0.0 || !have_prev) {
        return {far, t};
      }
      const double prev_diff = prev_far - prev_frr;
      const double alpha = prev_diff / (prev_diff - diff);
      return {prev_frr + alpha * (frr - prev_frr),
              prev_t + alpha * (t - prev_t)};
    }
    prev_far = far;
    prev_frr = frr;
    prev_t = t;
    have_prev = true;
  }
  // Unreachable: the sentinel point has diff <= 0.
  return {prev_far, prev_t};
}

std::map<Group, EerResult> intra_eer(const std::map<Group, ScoreSet>& groups) {
  std::map<Group, EerResult> out;
  for (const auto& [group, set] : groups) {
    if (set.genuine.empty() || set.impostor.empty()) continue;
    out[group] = eer(set);
  }
  return out;
}

void write_embedding_csv(const std::string& path,
                         const EmbeddingMap& embeddings) {
  if (embeddings.empty()) {
    throw DataError("embedding csv: nothing to write");
  }
  std::vector<std::string> ids;
  ids.reserve(embeddings.size());
  std::size_t dim = 0;
  for (const auto& [id, v] : embeddings) {
    ids.push_back(id);
    if (dim == 0) {
      dim = v.size();
    } else if (v.size() != dim) {
      throw DataError("embedding csv: inconsistent dimensions");
    }
  }
  std::sort(ids.begin(), ids.end());

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("embedding csv: cannot open " + path);
  std::vector<std::string> header;
  header.push_back("id");
  for (std::size_t i = 0; i < dim; ++i) header.push_back("v" + std::to_string(i));
  out << csv::join_row(header);
  for (const auto& id : ids) {
    std::vector<std::string> row;
    row.push_back(id);
    for (double v : embeddings.at(id)) row.push_back(csv::format_double(v));
    out << csv::join_row(row);
  }
  if (!out) throw DataError("embedding csv: write failed for " + path);
}

EmbeddingMap read_embedding_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("embedding csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("embedding csv: " + path + " is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = csv::split_row(line, path + ":1");
  if (header.size() < 2 || header[0] != "id") {
    throw DataError("embedding csv: " + path +
                    ": expected header id,v0,...");
  }
  EmbeddingMap map;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string context = path + ":" + std::to_string(line_no);
    const auto fields = csv::split_row(line, context);
    if (fields.size() != header.size()) {
      throw DataError(context + ": expected " +
                      std::to_string(header.size()) + " fields");
    }
    std::vector<double> v(fields.size() - 1);
    for (std::size_t i = 1; i < fields.size(); ++i) {
      v[i - 1] = csv::parse_double(fields[i], context);
    }
    if (!map.emplace(fields[0], std::move(v)).second) {
      throw DataError(context + ": duplicate id '" + fields[0] + "'");
    }
  }
  if (map.empty()) throw DataError("embedding csv: " + path + " has no rows");
  return map;
}

}  // namespace spane
