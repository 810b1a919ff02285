// core/src/corpus.cpp

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

#include "spane/corpus.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

namespace spane {

namespace {

using nlohmann::json;

std::string line_ref(const std::string& path, std::size_t line) {
  return path + ":" + std::to_string(line);
}

// Little-endian primitives.  Serialized formats are byte-defined, so the
// host byte order never leaks into files.
void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
  out.push_back(static_cast<char>((v >> 16) & 0xFF));
  out.push_back(static_cast<char>((v >> 24) & 0xFF));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xFF));
  out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits = 0;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

std::uint32_t get_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return std::uint16_t(p[0]) | (std::uint16_t(p[1]) << 8);
}

float get_f32(const unsigned char* p) {
  std::uint32_t bits = get_u32(p);
  float v = 0.0f;
  std::memcpy(&v, &bits, 4);
  return v;
}

std::int16_t get_i16(const unsigned char* p) {
  return static_cast<std::int16_t>(get_u16(p));
}

std::string read_file(const std::string& path, const char* what) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(std::string(what) + ": cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return data;
}

void write_file(const std::string& path, const std::string& data,
                const char* what) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(std::string(what) + ": cannot open " + path);
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw DataError(std::string(what) + ": write failed for " + path);
}

std::string require_string(const json& obj, const char* key,
                           const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw DataError(context + ": missing field '" + key + "'");
  }
  if (!it->is_string()) {
    throw DataError(context + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::string optional_string(const json& obj, const char* key,
                            const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end()) return {};
  if (!it->is_string()) {
    throw DataError(context + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

}  // namespace

const char* to_string(Gender g) {
  return g == Gender::kMale ? "M" : "F";
}

const char* to_string(Group g) {
  return g == Group::kControl ? "HC" : "PD";
}

const char* to_string(Task t) {
  return t == Task::kSentences ? "sentences" : "monologue";
}

Gender parse_gender(const std::string& s, const std::string& context) {
  if (s == "M") return Gender::kMale;
  if (s == "F") return Gender::kFemale;
  throw DataError(context + ": unknown gender '" + s + "' (expected M or F)");
}

Group parse_group(const std::string& s, const std::string& context) {
  if (s == "HC") return Group::kControl;
  if (s == "PD") return Group::kParkinson;
  throw DataError(context + ": unknown group '" + s + "' (expected HC or PD)");
}

Task parse_task(const std::string& s, const std::string& context) {
  if (s == "sentences") return Task::kSentences;
  if (s == "monologue") return Task::kMonologue;
  throw DataError(context + ": unknown task '" + s +
                  "' (expected sentences or monologue)");
}

std::vector<UtteranceRecord> load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("manifest: cannot open " + path);

  std::vector<UtteranceRecord> records;
  std::unordered_map<std::string, std::size_t> seen_ids;  // id -> line
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    // Blank lines are permitted between records.
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string context = line_ref(path, line_no);

    json obj = json::parse(line, nullptr, false);
    if (obj.is_discarded()) throw DataError(context + ": invalid JSON");
    if (!obj.is_object()) throw DataError(context + ": expected a JSON object");

    UtteranceRecord rec;
    rec.id = require_string(obj, "id", context);
    if (rec.id.empty()) throw DataError(context + ": empty id");
    rec.speaker = require_string(obj, "speaker", context);
    if (rec.speaker.empty()) throw DataError(context + ": empty speaker");
    rec.gender = parse_gender(require_string(obj, "gender", context), context);
    rec.group = parse_group(require_string(obj, "group", context), context);
    rec.task = parse_task(require_string(obj, "task", context), context);
    rec.audio_path = optional_string(obj, "audio_path", context);
    rec.feature_path = optional_string(obj, "feature_path", context);
    rec.transcript = optional_string(obj, "transcript", context);

    auto [it, inserted] = seen_ids.emplace(rec.id, line_no);
    if (!inserted) {
      throw DataError(context + ": duplicate id '" + rec.id +
                      "' (first seen at " + line_ref(path, it->second) + ")");
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_manifest(const std::string& path,
                    const std::vector<UtteranceRecord>& records) {
  std::string out;
  for (const auto& rec : records) {
    json obj;
    obj["id"] = rec.id;
    obj["speaker"] = rec.speaker;
    obj["gender"] = to_string(rec.gender);
    obj["group"] = to_string(rec.group);
    obj["task"] = to_string(rec.task);
    if (!rec.audio_path.empty()) obj["audio_path"] = rec.audio_path;
    if (!rec.feature_path.empty()) obj["feature_path"] = rec.feature_path;
    if (!rec.transcript.empty()) obj["transcript"] = rec.transcript;
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out, "manifest");
}

namespace {

constexpr char kFmatMagic[4] = {'S', 'P', 'F', 'M'};
constexpr std::uint32_t kFmatVersion = 1;

void validate_matrix(const FrameMatrix& m, const std::string& context) {
  if (m.frames < 1 || m.dim < 1) {
    throw DataError(context + ": matrix must have at least one frame and one "
                              "dimension (got " +
                    std::to_string(m.frames) + "x" + std::to_string(m.dim) +
                    ")");
  }
  if (m.data.size() != std::size_t(m.frames) * m.dim) {
    throw DataError(context + ": data size does not match frames*dim");
  }
  if (!(m.hop_s > 0.0f) || !std::isfinite(m.hop_s)) {
    throw DataError(context + ": hop must be positive and finite");
  }
  for (float v : m.data) {
    if (!std::isfinite(v)) {
      throw DataError(context + ": non-finite value in matrix");
    }
  }
}

}  // namespace

void write_fmat(const std::string& path, const FrameMatrix& m) {
  validate_matrix(m, "fmat: " + path);
  std::string out;
  out.reserve(20 + m.data.size() * 4);
  out.append(kFmatMagic, 4);
  put_u32(out, kFmatVersion);
  put_u32(out, m.frames);
  put_u32(out, m.dim);
  put_f32(out, m.hop_s);
  for (float v : m.data) put_f32(out, v);
  write_file(path, out, "fmat");
}

FrameMatrix read_fmat(const std::string& path) {
  const std::string data = read_file(path, "fmat");
  const std::string context = "fmat: " + path;
  if (data.size() < 20) throw DataError(context + ": truncated header");
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  if (std::memcmp(p, kFmatMagic, 4) != 0) {
    throw DataError(context + ": bad magic");
  }
  std::uint32_t version = get_u32(p + 4);
  if (version != kFmatVersion) {
    throw DataError(context + ": unsupported version " +
                    std::to_string(version));
  }
  FrameMatrix m;
  m.frames = get_u32(p + 8);
  m.dim = get_u32(p + 12);
  m.hop_s = get_f32(p + 16);
  const std::size_t count = std::size_t(m.frames) * m.dim;
  if (data.size() != 20 + count * 4) {
    throw DataError(context + ": payload size mismatch (expected " +
                    std::to_string(count) + " values)");
  }
  m.data.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    m.data[i] = get_f32(p + 20 + i * 4);
  }
  validate_matrix(m, context);
  return m;
}

namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;

}  // namespace

Waveform read_wav(const std::string& path) {
  const std::string data = read_file(path, "wav");
  const std::string context = "wav: " + path;
  const auto* p = reinterpret_cast<const unsigned char*>(data.data());
  if (data.size() < 12 || std::memcmp(p, "RIFF", 4) != 0 ||
      std::memcmp(p + 8, "WAVE", 4) != 0) {
    throw DataError(context + ": not a RIFF/WAVE file");
  }

  std::uint16_t format = 0;
  std::uint16_t channels = 0;
  std::uint32_t sample_rate = 0;
  std::uint16_t bits = 0;
  bool have_fmt = false;
  const unsigned char* payload = nullptr;
  std::uint32_t payload_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= data.size()) {
    const char* chunk_id = data.data() + pos;
    std::uint32_t chunk_size = get_u32(p + pos + 4);
    pos += 8;
    if (pos + chunk_size > data.size()) {
      throw DataError(context + ": truncated chunk");
    }
    if (std::memcmp(chunk_id, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw DataError(context + ": short fmt chunk");
      format = get_u16(p + pos);
      channels = get_u16(p + pos + 2);
      sample_rate = get_u32(p + pos + 4);
      bits = get_u16(p + pos + 14);
      have_fmt = true;
    } else if (std::memcmp(chunk_id, "data", 4) == 0) {
      payload = p + pos;
      payload_size = chunk_size;
    }
    // Chunks are word-aligned.
    pos += chunk_size + (chunk_size & 1);
  }

  if (!have_fmt) throw DataError(context + ": missing fmt chunk");
  if (payload == nullptr) throw DataError(context + ": missing data chunk");
  if (format != kFormatPcm && format != kFormatFloat) {
    throw DataError(context + ": unsupported encoding (format tag " +
                    std::to_string(format) + "); only uncompressed 16-bit "
                    "integer and 32-bit float PCM are readable");
  }
  if (format == kFormatPcm && bits != 16) {
    throw DataError(context + ": unsupported bit depth " +
                    std::to_string(bits) + " for integer PCM");
  }
  if (format == kFormatFloat && bits != 32) {
    throw DataError(context + ": unsupported bit depth " +
                    std::to_string(bits) + " for float PCM");
  }
  if (channels != 1 && channels != 2) {
    throw DataError(context + ": unsupported channel count " +
                    std::to_string(channels));
  }
  if (sample_rate == 0) throw DataError(context + ": zero sample rate");
  if (payload_size == 0) throw DataError(context + ": empty data chunk");

  const std::uint32_t bytes_per_sample = bits / 8;
  const std::uint32_t frame_bytes = bytes_per_sample * channels;
  if (payload_size % frame_bytes != 0) {
    throw DataError(context + ": data chunk size not a whole number of "
                              "sample frames");
  }
  const std::uint32_t n = payload_size / frame_bytes;

  Waveform w;
  w.sample_rate = static_cast<int>(sample_rate);
  w.samples.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const unsigned char* s = payload + std::size_t(i) * frame_bytes;
    double value;
    if (format == kFormatPcm) {
      if (channels == 1) {
        value = get_i16(s) / 32768.0;
      } else {
        value = (get_i16(s) + get_i16(s + 2)) / 2.0 / 32768.0;
      }
    } else {
      if (channels == 1) {
        value = get_f32(s);
      } else {
        value = (double(get_f32(s)) + double(get_f32(s + 4))) / 2.0;
      }
      // Float files may carry out-of-range values; the waveform contract
      // is [-1, 1].
      if (value > 1.0) value = 1.0;
      if (value < -1.0) value = -1.0;
    }
    w.samples[i] = static_cast<float>(value);
  }
  return w;
}

void write_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0) throw DataError("wav: invalid sample rate");
  if (w.samples.empty()) throw DataError("wav: refusing to write empty audio");

  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint32_t data_bytes = n * 2;
  std::string out;
  out.reserve(44 + data_bytes);
  out.append("RIFF", 4);
  put_u32(out, 36 + data_bytes);
  out.append("WAVE", 4);
  out.append("fmt ", 4);
  put_u32(out, 16);
  put_u16(out, kFormatPcm);
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);  // block align
  put_u16(out, 16);
  out.append("data", 4);
  put_u32(out, data_bytes);
  for (float v : w.samples) {
    double scaled = std::lround(double(v) * 32767.0);
    if (scaled > 32767.0) scaled = 32767.0;
    if (scaled < -32768.0) scaled = -32768.0;
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  write_file(path, out, "wav");
}

}  // namespace spane
