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
#include <map>
#include <set>
#include <vector>

#include "drilmpc/distributions.hpp"
#include "drilmpc/mpc.hpp"
#include "drilmpc/ocp.hpp"
#include "drilmpc/risk.hpp"
#include "drilmpc/safeset.hpp"

namespace drilmpc::iterate {

struct IterationOptions {
  mpc::MpcOptions mpc;
  /// Radius used for the ambiguity set built after iteration j is theta * theta_decay^j.
  double theta = 5e-2;
  double theta_decay = 1.0;
  /// Reliability level the radius is meant to certify; carried into reports only.
  double confidence = 0.0;
  /// Keep the dataset fixed at the initial samples instead of growing it.
  bool freeze_dataset = false;

  void validate() const;
  [[nodiscard]] double theta_at(int j) const;
};

struct IterationRecord {
  int iter = 0;
  mpc::ClosedLoopTrajectory run;
  double cost = 0.0;  // realized cost of the whole trajectory
  std::set<int> removed;
  /// Radius of the ambiguity set the trajectory was planned under.
  double theta = 0.0;
  std::size_t num_samples = 0;  // dataset size after the iteration
  /// Every visited state meets the CVaR constraint under the true distribution.
  bool true_safe = false;
};

struct IterationState {
  int j = 0;  // completed iterations
  dist::SampleSet samples;
  risk::AmbiguitySet amb;
  safeset::SampledSafeSet safe_set;
  /// Full trajectories of the live indices, used as warm starts.
  std::map<int, safeset::Trajectory> stored;
  std::vector<IterationRecord> records;
};

/// Open-loop seed for planar double-integrator scenarios: accelerate then
/// brake along the first position axis, then along the second, using the
/// largest acceleration the input box allows in whole steps. On the
/// benchmark this runs along y = 0 and then z = 5, clear of every obstacle
/// realization.
std::vector<Eigen::VectorXd> benchmark_seed_inputs(const ocp::Scenario& scenario);

/// Rolls out `inputs` from the start and verifies that the trajectory ends at
/// the target, respects the boxes and keeps g(x, w) <= delta at every atom
/// of the support. Throws SeedingError otherwise.
safeset::Trajectory seed(const ocp::Scenario& scenario, const std::vector<Eigen::VectorXd>& inputs);

/// Iteration 0: the seed in the safe set, n0 samples from the true
/// distribution and the ambiguity set around their empirical distribution.
IterationState initialize(const ocp::Scenario& scenario, const IterationOptions& options,
                          const safeset::Trajectory& seed_traj, std::size_t n0, dist::Rng& rng);

/// One pass of the outer loop: plan with the previous safe set and ambiguity
/// set, add the new samples, rebuild the ambiguity set, store the trajectory
/// and drop every stored trajectory with a state that is no longer safe.
IterationState run_iteration(IterationState state, const ocp::Scenario& scenario,
                             const IterationOptions& options, dist::Rng& rng);

/// Closed-loop trajectory satisfies CVaR_beta[g] <= delta under the true
/// distribution at every visited state.
bool trajectory_true_safe(const ocp::Scenario& scenario, const safeset::Trajectory& traj);

/// First K inputs (padded with zeros at the target) of every stored trajectory.
std::vector<mpc::WarmStart> prefix_warm_starts(const IterationState& state, int horizon);

struct ExperimentReport {
  ocp::Scenario scenario;
  IterationOptions options;
  std::uint64_t seed = 0;
  safeset::Trajectory seed_traj;
  std::vector<int> initial_samples;
  std::vector<IterationRecord> records;
  std::size_t final_safe_set_size = 0;

  [[nodiscard]] int colliding_iterations() const;
  /// Fraction of iterations whose trajectory is safe under the true distribution.
  [[nodiscard]] double safety_frequency() const;
};

/// Seed, initial samples and `iterations` passes of run_iteration, all from
/// one generator seeded with `seed`.
ExperimentReport run_experiment(const ocp::Scenario& scenario, const IterationOptions& options,
                                const std::vector<Eigen::VectorXd>& seed_inputs, std::size_t n0,
                                int iterations, std::uint64_t seed,
                                const std::filesystem::path& checkpoint_dir = {});

/// Writes safe set, dataset, stored trajectories, generator state and
/// iteration counter under `dir`.
void write_checkpoint(const IterationState& state, const dist::Rng& rng, const std::filesystem::path& dir);
/// Restores what write_checkpoint stored; records are not restored.
IterationState read_checkpoint(const std::filesystem::path& dir, const ocp::Scenario& scenario,
                               const IterationOptions& options, dist::Rng& rng);

}  // namespace drilmpc::iterate
