// Copyright 2026 The drilmpc Authors
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

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "drilmpc/iterate.hpp"
#include "drilmpc/ocp.hpp"

namespace drilmpc::config {

struct OutputConfig {
  std::string directory = "out";
  bool checkpoints = false;
};

/// Everything needed to reproduce one experiment. Keys absent from a config
/// file keep the benchmark values below.
struct ExperimentConfig {
  ocp::Scenario scenario = ocp::Scenario::benchmark();
  /// Open-loop seed inputs; empty selects the benchmark seed.
  std::vector<Eigen::VectorXd> seed_inputs;
  iterate::IterationOptions options;
  std::size_t n0 = 5;
  int iterations = 20;
  std::uint64_t seed = 1;
  std::vector<double> sweep_thetas{5e-6, 5e-4, 5e-2, 0.5};
  OutputConfig output;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Parses a JSON config. Errors name the file, the line and the key path.
ExperimentConfig parse_config(const std::filesystem::path& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

/// Canonical JSON with every field spelled out; parse_config_text accepts it.
std::string dump_config(const ExperimentConfig& cfg);

}  // namespace drilmpc::config
