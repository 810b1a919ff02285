// tools/main.cpp

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

#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spane/errors.hpp"
#include "spane/pipeline.hpp"
#include "spane/version.hpp"

int main(int argc, char** argv) {
  CLI::App app{"spane-kit: batch speech privacy and utility evaluation"};
  app.set_version_flag("--version", std::string(spane::kVersion));

  std::string command;
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_dir;
  int jobs = 0;

  app.add_option("command", command,
                 std::string("one of ") + spane::pipeline::kCommandList)
      ->required();
  app.add_option("--config", config_path, "JSON config file")->required();
  CLI::Option* seed_opt =
      app.add_option("--seed", seed, "override the config seed");
  CLI::Option* out_opt =
      app.add_option("--out", out_dir, "override the output directory");
  CLI::Option* jobs_opt =
      app.add_option("--jobs", jobs, "override the worker thread count");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_name() == "CallForHelp" || e.get_name() == "CallForVersion"
               ? 0
               : 2;
  }

  spane::pipeline::RunOptions options;
  options.command = command;
  options.config_path = config_path;
  if (seed_opt->count() > 0) options.seed = seed;
  if (out_opt->count() > 0) options.out_dir = out_dir;
  if (jobs_opt->count() > 0) options.jobs = jobs;

  try {
    spane::pipeline::run(options);
  } catch (const spane::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    if (options.command.empty() ||
        std::string(e.what()).rfind("unknown command", 0) == 0) {
      std::cerr << app.help() << "\n";
    }
    return 2;
  } catch (const spane::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
