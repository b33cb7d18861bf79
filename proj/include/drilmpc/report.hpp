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

#include <filesystem>
#include <string>
#include <vector>

#include "drilmpc/config.hpp"
#include "drilmpc/iterate.hpp"

namespace drilmpc::report {

/// Smallest distance from the robot position to the obstacle's nominal center.
double min_clearance(const ocp::ObstacleModel& obstacle, const safeset::Trajectory& traj);

/// One row per state, seed first as iteration 0. The final row of each
/// trajectory carries a zero input and zero stage cost.
std::string trajectories_csv(const iterate::ExperimentReport& report);
/// Initial samples (iteration 0) and one realized obstacle per closed-loop step.
std::string obstacles_csv(const iterate::ExperimentReport& report);
std::string summary_json(const iterate::ExperimentReport& report, const config::ExperimentConfig& cfg);

struct ReportPaths {
  std::filesystem::path trajectories;
  std::filesystem::path summary;
  std::filesystem::path obstacles;
};

/// Writes trajectories.csv, summary.json and obstacles.csv under `dir`.
ReportPaths emit_report(const iterate::ExperimentReport& report, const config::ExperimentConfig& cfg,
                        const std::filesystem::path& dir);

struct CsvRow {
  int iter = 0;
  int t = 0;
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  double stage_cost = 0.0;
  bool collision = false;
};

/// Inverse of trajectories_csv for the given state and input sizes.
std::vector<CsvRow> parse_trajectories_csv(const std::string& text, Eigen::Index nx, Eigen::Index nu);

struct CheckItem {
  std::string name;
  bool ok = false;
  std::string detail;
};

/// Re-verifies a report written by emit_report from its files alone:
/// bookkeeping, dynamics, boxes, costs, collisions and the DR constraint
/// under each iteration's reconstructed ambiguity set.
std::vector<CheckItem> check_report(const std::filesystem::path& dir);

}  // namespace drilmpc::report
