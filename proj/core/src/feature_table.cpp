// core/src/feature_table.cpp

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

#include "spane/feature_table.hpp"

#include <charconv>
#include <fstream>

#include "spane/csv.hpp"

namespace spane {

std::size_t FeatureTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw DataError("feature table: no column named '" + name + "'");
}

std::vector<double> FeatureTable::column(std::size_t col) const {
  std::vector<double> out(rows());
  for (std::size_t r = 0; r < rows(); ++r) out[r] = at(r, col);
  return out;
}

FeatureTable read_feature_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("feature table: cannot open " + path);

  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("feature table: " + path + " is empty");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  auto header = csv::split_row(line, path + ":1");
  if (header.size() < 2) {
    throw DataError("feature table: " + path +
                    ": header needs an id column and at least one feature");
  }

  const std::size_t ncols = header.size() - 1;
  std::vector<std::vector<std::string>> raw(ncols);
  std::vector<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = csv::split_row(line, path + ":" + std::to_string(line_no));
    if (fields.size() != header.size()) {
      throw DataError("feature table: " + path + ":" +
                      std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    ids.push_back(fields[0]);
    for (std::size_t c = 0; c < ncols; ++c) raw[c].push_back(fields[c + 1]);
  }
  if (ids.empty()) {
    throw DataError("feature table: " + path + " has no data rows");
  }

  // Keep columns that parse fully as numbers; drop annotation columns.
  std::vector<std::size_t> numeric;
  std::vector<std::vector<double>> parsed(ncols);
  for (std::size_t c = 0; c < ncols; ++c) {
    bool ok = true;
    parsed[c].reserve(ids.size());
    for (const auto& s : raw[c]) {
      double v = 0.0;
      auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        ok = false;
        break;
      }
      parsed[c].push_back(v);
    }
    if (ok) numeric.push_back(c);
  }
  if (numeric.empty()) {
    throw DataError("feature table: " + path + " has no numeric columns");
  }

  FeatureTable table;
  table.ids = std::move(ids);
  for (std::size_t c : numeric) table.columns.push_back(header[c + 1]);
  table.values.resize(table.ids.size() * numeric.size());
  for (std::size_t r = 0; r < table.ids.size(); ++r) {
    for (std::size_t i = 0; i < numeric.size(); ++i) {
      table.values[r * numeric.size() + i] = parsed[numeric[i]][r];
    }
  }
  return table;
}

void write_feature_table(const std::string& path, const FeatureTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("feature table: cannot open " + path);
  std::vector<std::string> header;
  header.push_back("id");
  for (const auto& c : table.columns) header.push_back(c);
  out << csv::join_row(header);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    std::vector<std::string> row;
    row.push_back(table.ids[r]);
    for (std::size_t c = 0; c < table.cols(); ++c) {
      row.push_back(csv::format_double(table.at(r, c)));
    }
    out << csv::join_row(row);
  }
  if (!out) throw DataError("feature table: write failed for " + path);
}

}  // namespace spane
