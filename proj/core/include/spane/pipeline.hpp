// core/include/spane/pipeline.hpp

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

// Batch command driver: reads a JSON config, runs one pipeline command,
// and writes report files plus a run log into the output directory.

#ifndef SPANE_PIPELINE_HPP_
#define SPANE_PIPELINE_HPP_

#include <cstdint>
#include <optional>
#include <string>

namespace spane::pipeline {

inline constexpr const char* kCommandList =
    "synth, convert, features, distort, privacy, utility, wer, report";

struct RunOptions {
  std::string command;
  std::string config_path;
  // Command-line overrides; when set they replace the config values.
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> jobs;
};

// Runs one command to completion.  Outputs are deterministic for a fixed
// config and seed; the only timestamp lives in the run log.  Throws
// ConfigError for config problems (including an unknown command) and
// DataError for input-file problems.
void run(const RunOptions& options);

}  // namespace spane::pipeline

#endif  // SPANE_PIPELINE_HPP_
