// core/include/spane/csv.hpp

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

// Minimal CSV reading/writing.  Fields containing commas, quotes or
// newlines are quoted; doubles are rendered with std::to_chars so that
// values round-trip exactly and output is byte-stable.

#ifndef SPANE_CSV_HPP_
#define SPANE_CSV_HPP_

#include <charconv>
#include <cstdint>
#include <string>
#include <vector>

#include "spane/errors.hpp"

namespace spane::csv {

// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& context) {
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
    throw DataError(context + ": not a number: '" + s + "'");
  }
  return v;
}

inline std::string quote_field(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

inline std::string join_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += ',';
    out += quote_field(fields[i]);
  }
  out += '\n';
  return out;
}

// Splits one CSV line (no trailing newline) into fields.
inline std::vector<std::string> split_row(const std::string& line,
                                          const std::string& context) {
  std::vector<std::string> fields;
  std::string cur;
  bool in_quotes = false;
  std::size_t i = 0;
  while (i < line.size()) {
    char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          i += 2;
          continue;
        }
        in_quotes = false;
        ++i;
        continue;
      }
      cur += c;
      ++i;
    } else {
      if (c == '"' && cur.empty()) {
        in_quotes = true;
        ++i;
      } else if (c == ',') {
        fields.push_back(cur);
        cur.clear();
        ++i;
      } else {
        cur += c;
        ++i;
      }
    }
  }
  if (in_quotes) throw DataError(context + ": unterminated quoted field");
  fields.push_back(cur);
  return fields;
}

}  // namespace spane::csv

#endif  // SPANE_CSV_HPP_
