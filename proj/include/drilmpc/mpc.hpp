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

#include <vector>

#include "drilmpc/distributions.hpp"
#include "drilmpc/ocp.hpp"
#include "drilmpc/risk.hpp"
#include "drilmpc/safeset.hpp"

namespace drilmpc::mpc {

/// A known input sequence ending at a stored state. Used to seed the
/// per-candidate solve; `terminal` must be a bitwise copy of the stored state.
struct WarmStart {
  std::vector<Eigen::VectorXd> inputs;
  Eigen::VectorXd terminal;
};

/// min sum_{k<K} r(x_k, u_k) + Qbar(x_K) subject to the dynamics, the
/// state and input boxes, the DR risk constraint at k = 0..K-1 and x_K in
/// the stored terminal candidates.
struct FiniteHorizonProblem {
  Eigen::VectorXd x;
  int horizon = 5;
  ocp::Scenario scenario;
  std::vector<safeset::TerminalCandidate> candidates;
  risk::AmbiguitySet amb;
  std::vector<WarmStart> warm_starts;
  /// Keep only this many candidates with the smallest risk-free bound
  /// (warm-started candidates are always kept). Zero keeps all.
  int max_candidates = 0;

  void validate() const;
};

struct FhpSolution {
  std::vector<Eigen::VectorXd> states;  // x_{0|t} .. x_{K|t}
  std::vector<Eigen::VectorXd> inputs;  // u_{0|t} .. u_{K-1|t}
  double objective = 0.0;
  safeset::TerminalCandidate terminal;
  int candidates_solved = 0;
};

/// Enumerates terminal candidates in order of their risk-free lower bound and
/// solves each with the risk constraint handled by cutting planes on a
/// frozen-face surrogate, re-selecting faces until they settle. A solution is
/// accepted only after the exact DR oracle passes at every k < K. Throws
/// InfeasibleError when no candidate admits a feasible solution.
FhpSolution solve_fhp(const FiniteHorizonProblem& p);

/// True iff the rollout of `inputs` from `x` respects the boxes within 1e-8,
/// the DR constraint at k = 0..K-1 and ends within `terminal_tol` of
/// `terminal`.
bool sequence_feasible(const FiniteHorizonProblem& p, const std::vector<Eigen::VectorXd>& inputs,
                       const Eigen::VectorXd& terminal, double terminal_tol = 1e-8);

struct MpcOptions {
  int horizon = 5;
  double eps_term = 1e-2;
  int t_max = 500;
  int max_candidates = 0;
};

struct ClosedLoopTrajectory {
  safeset::Trajectory traj;
  /// Realized uncertainty atom per step; sample t is paired with state t+1.
  std::vector<int> samples;
  /// Robot strictly inside the obstacle realized by sample t at state t+1.
  std::vector<bool> collisions;
  /// Objective of each MPC solve; the landing steps that follow have none.
  std::vector<double> j_values;
  /// Open-loop plan of each MPC solve.
  std::vector<FhpSolution> plans;
  int mpc_steps = 0;
  /// Shifted predictions plus the stored successor, checked before each solve.
  int shift_checks = 0;
  int shift_failures = 0;

  [[nodiscard]] bool collided() const;
  [[nodiscard]] int length() const { return static_cast<int>(traj.length()); }
};

/// Receding-horizon loop: solve, apply the first input, observe one
/// uncertainty sample, repeat until within eps_term of the target, then
/// steer exactly onto the target with a minimum-norm deadbeat segment.
/// Throws ConvergenceError past t_max steps.
ClosedLoopTrajectory dr_mpc(const ocp::Scenario& scenario, const safeset::SampledSafeSet& safe_set,
                            const risk::AmbiguitySet& amb, dist::Rng& rng,
                            const MpcOptions& options = {},
                            const std::vector<WarmStart>& initial_warm_starts = {});

/// J_{t+1} <= J_t - r(x_t, u_t) + tol for every consecutive pair of MPC solves.
bool lyapunov_check(const std::vector<double>& j_values, const std::vector<double>& stage_costs,
                    double tol = 1e-4);

/// Rollout of `inputs` from `x` through `dyn`.
std::vector<Eigen::VectorXd> rollout(const ocp::LinearDynamics& dyn, const Eigen::VectorXd& x,
                                     const std::vector<Eigen::VectorXd>& inputs);

}  // namespace drilmpc::mpc
