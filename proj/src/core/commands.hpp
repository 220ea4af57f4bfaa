// Copyright 2026 The spice-pce Authors.
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

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "uncertainty.hpp"

namespace spice {

// Run configuration shared by every batch command. JSON keys match the
// member names; unknown keys are rejected.
struct RunConfig {
  std::string case_path;  // key "case"
  std::string name;       // output file stem, defaults to the command name
  int n_areas = 1;
  double epsilon = 0.0;
  Distribution distribution = Distribution::NormalizedUniform;
  Distribution evaluation_distribution = Distribution::NormalizedUniform;  // defaults to `distribution`
  std::uint64_t seed = 1;
  std::size_t samples = 10000;
  double c_off = 1e-10;
  bool truncate_quartic = true;
  int degree = 2;
  std::vector<std::string> monitor{"voltage", "flow"};
  std::string output_dir = ".";
  int threads = 0;
  std::vector<double> quantiles{0.05, 0.5, 0.95};
  double delta = 0.05;
  int max_outer_iterations = 10;
  std::size_t validation_samples = 10000;
  std::uint64_t validation_seed = 0x5eed0001;
};

// Throws Config on unknown keys, wrong types or out-of-range values.
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::ordered_json config_to_json(const RunConfig& c);

struct CommandResult {
  std::vector<std::string> files;  // paths written, in order
  nlohmann::ordered_json summary;  // human-facing digest, includes wall times
  int exit_code = 0;               // nonzero only for a CC-OPF loop that hit its iteration cap
};

// `command` is one of spice, pce-full, mc, ccopf, partition.
CommandResult run_command(const std::string& command, const RunConfig& config);

// TV table between two report files; writes it to `output_path` when nonempty.
CommandResult compare_command(const std::string& report_a, const std::string& report_b,
                              const std::string& output_path);

}  // namespace spice
