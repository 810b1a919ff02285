// core/include/spane/privacy.hpp

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

// Speaker re-identification risk scoring: utterance embeddings, an
// enrollment/trial protocol, cosine scoring against enrolled speaker
// models, and equal error rates pooled and per group.

#ifndef SPANE_PRIVACY_HPP_
#define SPANE_PRIVACY_HPP_

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "spane/corpus.hpp"

namespace spane {

// L2-normalized concatenation of the per-dimension mean and population
// standard deviation of a frame matrix (length 2*D).  Errors if the result
// would be the zero vector.
std::vector<double> embed(const FrameMatrix& m);

// Halves of a single-utterance monologue, split at frame T/2.  Requires at
// least two frames.
std::pair<FrameMatrix, FrameMatrix> split_monologue(const FrameMatrix& m);

inline constexpr const char* kSplitSuffixFirst = "#a";
inline constexpr const char* kSplitSuffixSecond = "#b";

struct TrialProtocolConfig {
  std::uint32_t per_speaker_trials = 20;
  std::uint32_t per_speaker_enroll = 20;
  std::uint64_t seed = 0;
};

struct SpeakerSets {
  std::string speaker;
  Group group = Group::kControl;
  std::vector<std::string> enroll_ids;
  std::vector<std::string> trial_ids;
};

struct Trial {
  std::string trial_id;
  std::string trial_speaker;
  std::string claimed_speaker;
  bool same_speaker = false;
  Group trial_group = Group::kControl;
  Group claimed_group = Group::kControl;
};

struct TrialProtocol {
  std::vector<SpeakerSets> speakers;
  std::vector<Trial> trials;  // full cross: trial utterances x speakers
  // Records whose single monologue was split into "<id>#a" / "<id>#b"
  // pseudo-utterances ("#a" enrolls, "#b" is the trial side).
  std::vector<std::string> split_ids;
};

// Splits each speaker's utterances randomly and evenly into trial and
// enrollment sides (capped per side), deterministically per (seed,
// speaker).  A speaker with exactly one utterance of the monologue task is
// half-split instead.  Speakers that still lack a side are an error.  The
// trial list is the full cross of trial utterances against all enrolled
// speakers.
TrialProtocol build_protocol(const std::vector<UtteranceRecord>& records,
                             const TrialProtocolConfig& cfg);

struct ScoreSet {
  std::vector<double> genuine;
  std::vector<double> impostor;
};

struct TrialScores {
  ScoreSet pooled;
  std::map<Group, ScoreSet> per_group;  // same-group trial pairs only
};

using EmbeddingMap = std::unordered_map<std::string, std::vector<double>>;

// Scores every trial as the cosine of the trial embedding against the
// claimed speaker's enrollment model (L2-normalized mean of enrollment
// embeddings).  Missing embeddings are an error naming the utterance.
TrialScores score_trials(const TrialProtocol& protocol,
                         const EmbeddingMap& embeddings);

struct EerResult {
  double eer = 0.0;
  double threshold = 0.0;
};

// Equal error rate of a score set: the crossing of the false acceptance
// rate (impostor >= t) and false rejection rate (genuine < t) over a sweep
// of the observed scores, linearly interpolated between adjacent operating
// points.  Both sides must be non-empty.
EerResult eer(const ScoreSet& scores);

// Per-group equal error rates.  A group with an empty genuine or impostor
// side is absent from the result rather than zero.
std::map<Group, EerResult> intra_eer(const std::map<Group, ScoreSet>& groups);

// Embedding CSV: header id,v0..v{n-1}; one row per utterance.
void write_embedding_csv(const std::string& path, const EmbeddingMap& embeddings);
EmbeddingMap read_embedding_csv(const std::string& path);

}  // namespace spane

#endif  // SPANE_PRIVACY_HPP_
