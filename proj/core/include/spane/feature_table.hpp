// core/include/spane/feature_table.hpp

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

#ifndef SPANE_FEATURE_TABLE_HPP_
#define SPANE_FEATURE_TABLE_HPP_

#include <string>
#include <vector>

#include "spane/errors.hpp"

namespace spane {

// Per-utterance numeric features: one row per utterance id, named columns,
// values stored row-major.
struct FeatureTable {
  std::vector<std::string> ids;
  std::vector<std::string> columns;
  std::vector<double> values;  // ids.size() * columns.size()

  std::size_t rows() const { return ids.size(); }
  std::size_t cols() const { return columns.size(); }

  double at(std::size_t row, std::size_t col) const {
    return values[row * columns.size() + col];
  }
  double& at(std::size_t row, std::size_t col) {
    return values[row * columns.size() + col];
  }

  // Index of a named column, or throws naming the column.
  std::size_t column_index(const std::string& name) const;

  std::vector<double> column(std::size_t col) const;
};

// Reads a CSV whose first column is the utterance id.  Columns whose values
// do not all parse as numbers (such as a trailing flags column) are
// dropped.  Requires a header row and at least one numeric column.
FeatureTable read_feature_table(const std::string& path);

// Writes id + numeric columns; doubles rendered to round-trip exactly.
void write_feature_table(const std::string& path, const FeatureTable& table);

}  // namespace spane

#endif  // SPANE_FEATURE_TABLE_HPP_
