// core/include/spane/corpus.hpp

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

// Corpus model and I/O: utterance manifests (line-delimited JSON), frame
// feature matrices (FMAT binary format), and PCM WAV audio.

#ifndef SPANE_CORPUS_HPP_
#define SPANE_CORPUS_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "spane/errors.hpp"

namespace spane {

enum class Gender { kMale, kFemale };
enum class Group { kControl, kParkinson };
enum class Task { kSentences, kMonologue };

const char* to_string(Gender g);
const char* to_string(Group g);
const char* to_string(Task t);
Gender parse_gender(const std::string& s, const std::string& context);
Group parse_group(const std::string& s, const std::string& context);
Task parse_task(const std::string& s, const std::string& context);

// One utterance of one speaker.  Paths are stored as written in the
// manifest; relative paths are resolved against the manifest's directory
// by the pipeline, not here.
struct UtteranceRecord {
  std::string id;
  std::string speaker;
  Gender gender = Gender::kMale;
  Group group = Group::kControl;
  Task task = Task::kSentences;
  std::string audio_path;    // optional, empty if absent
  std::string feature_path;  // optional, empty if absent
  std::string transcript;    // optional, empty if absent
};

// Row-major frame-level feature matrix, T frames by D dimensions, with the
// frame hop in seconds.  All values must be finite.
struct FrameMatrix {
  std::uint32_t frames = 0;  // T
  std::uint32_t dim = 0;     // D
  float hop_s = 0.0f;
  std::vector<float> data;   // frames * dim, row-major

  float* row(std::uint32_t t) { return data.data() + std::size_t(t) * dim; }
  const float* row(std::uint32_t t) const {
    return data.data() + std::size_t(t) * dim;
  }
};

// Mono audio, samples in [-1, 1].
struct Waveform {
  int sample_rate = 0;
  std::vector<float> samples;

  double duration_s() const {
    return sample_rate > 0
               ? static_cast<double>(samples.size()) / sample_rate
               : 0.0;
  }
};

// Loads and validates a line-delimited JSON manifest.  Each line is one
// object with the exact lowercase field names of UtteranceRecord.
// Mandatory: id, speaker, gender (M/F), group (HC/PD), task
// (sentences/monologue).  Optional: audio_path, feature_path, transcript.
// Errors cite the 1-based line number; duplicate ids cite both lines.
std::vector<UtteranceRecord> load_manifest(const std::string& path);

// Writes records as line-delimited JSON, one object per line, optional
// fields omitted when empty.
void write_manifest(const std::string& path,
                    const std::vector<UtteranceRecord>& records);

// FMAT container: magic "SPFM", then version (= 1), frame count T and
// dimension D as unsigned 32-bit, the hop in seconds as 32-bit float, all
// little-endian, followed by T*D 32-bit little-endian floats in row-major
// order.  Round-trips bit-exactly.
void write_fmat(const std::string& path, const FrameMatrix& m);
FrameMatrix read_fmat(const std::string& path);

// Reads a RIFF/WAVE file holding uncompressed 16-bit integer or 32-bit
// float PCM, mono or stereo.  16-bit samples are scaled by 1/32768; stereo
// is downmixed by averaging.  Compressed encodings are rejected.
Waveform read_wav(const std::string& path);

// Writes mono 16-bit PCM.
void write_wav(const std::string& path, const Waveform& w);

}  // namespace spane

#endif  // SPANE_CORPUS_HPP_
