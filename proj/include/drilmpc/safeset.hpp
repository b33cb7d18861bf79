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
#include <functional>
#include <iosfwd>
#include <limits>
#include <map>
#include <set>
#include <vector>

#include "drilmpc/ocp.hpp"
#include "drilmpc/risk.hpp"

namespace drilmpc::safeset {

/// States x_0..x_T, inputs u_0..u_{T-1} and realized stage costs r(x_t, u_t).
struct Trajectory {
  std::vector<Eigen::VectorXd> states;
  std::vector<Eigen::VectorXd> inputs;
  std::vector<double> stage_costs;

  [[nodiscard]] std::size_t length() const { return inputs.size(); }
  /// Sum of the stage costs (the tail at the target contributes nothing).
  [[nodiscard]] double total_cost() const;
};

/// One stored state. `input` is the input applied at this state along its
/// trajectory (zero at the final state), so the stored successor is
/// reproducible from the dynamics.
struct SafeSetEntry {
  int iter = 0;
  int time = 0;
  Eigen::VectorXd state;
  Eigen::VectorXd input;
  double cost_to_go = 0.0;
};

/// Resolution used to decide whether two stored states are the same point.
inline constexpr double kStateQuantum = 1e-9;

using StateKey = std::vector<std::int64_t>;
StateKey state_key(const Eigen::VectorXd& x);

/// Distinct stored state together with its minimum cost-to-go.
struct TerminalCandidate {
  Eigen::VectorXd state;
  double cost_to_go;
  std::size_t entry;  // index of the entry attaining the minimum
};

class SampledSafeSet {
 public:
  /// Stores x_1..x_T of `traj` under index `iter` with cost-to-go from the
  /// reverse cumulative sum of stage costs. The final state must be within
  /// `target_tol` of `target`. Throws ParameterError on a duplicate index.
  void append_trajectory(int iter, const Trajectory& traj, const Eigen::VectorXd& target,
                         double target_tol = 1e-9);

  /// Removes every trajectory with at least one stored state failing
  /// `is_safe`; returns the removed indices.
  std::set<int> prune_unsafe(const std::function<bool(const Eigen::VectorXd&)>& is_safe);

  /// Minimum cost-to-go over entries matching `x`; +infinity if none does.
  [[nodiscard]] double min_cost_to_go(const Eigen::VectorXd& x) const;
  /// Entry attaining min_cost_to_go (lowest iteration on ties), if any.
  [[nodiscard]] const SafeSetEntry* best_entry(const Eigen::VectorXd& x) const;
  /// Entry stored for trajectory `iter` at `time`, or nullptr.
  [[nodiscard]] const SafeSetEntry* at(int iter, int time) const;
  /// Entry one step later along the same trajectory, or nullptr at its end.
  [[nodiscard]] const SafeSetEntry* successor(const SafeSetEntry& e) const;

  [[nodiscard]] std::vector<TerminalCandidate> terminal_candidates() const;

  [[nodiscard]] const std::vector<SafeSetEntry>& entries() const { return entries_; }
  [[nodiscard]] const std::set<int>& live_iters() const { return live_; }
  [[nodiscard]] bool empty() const { return entries_.empty(); }
  [[nodiscard]] std::size_t size() const { return entries_.size(); }

  /// One line per entry: `iter time cost_to_go nx x... nu u...`, 17 significant digits.
  void write(std::ostream& out) const;
  static SampledSafeSet read(std::istream& in);

 private:
  void insert(SafeSetEntry e);
  void rebuild_index();

  std::vector<SafeSetEntry> entries_;
  std::set<int> live_;
  std::map<StateKey, std::size_t> best_;
  std::map<std::pair<int, int>, std::size_t> by_position_;
};

/// Prunes with the DR predicate: a state is safe when the worst-case CVaR of
/// its per-atom penetration over `amb` is within the risk tolerance.
std::set<int> prune_unsafe(SampledSafeSet& ss, const risk::AmbiguitySet& amb,
                           const ocp::ObstacleModel& obstacle, const risk::RiskSpec& spec);

bool state_is_dr_safe(const Eigen::VectorXd& x, const risk::AmbiguitySet& amb,
                      const ocp::ObstacleModel& obstacle, const risk::RiskSpec& spec);

}  // namespace drilmpc::safeset
