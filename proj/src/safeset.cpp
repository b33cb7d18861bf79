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

#include "drilmpc/safeset.hpp"

#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>

#include "drilmpc/errors.hpp"

namespace drilmpc::safeset {

double Trajectory::total_cost() const {
  return std::accumulate(stage_costs.begin(), stage_costs.end(), 0.0);
}

StateKey state_key(const Eigen::VectorXd& x) {
  StateKey key(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    key[static_cast<std::size_t>(i)] = std::llround(x(i) / kStateQuantum);
  }
  return key;
}

void SampledSafeSet::append_trajectory(int iter, const Trajectory& traj,
                                       const Eigen::VectorXd& target, double target_tol) {
  const auto T = traj.length();
  if (traj.states.size() != T + 1 || traj.stage_costs.size() != T) {
    throw DimensionError(fmt::format("trajectory with {} inputs has {} states and {} costs", T,
                                     traj.states.size(), traj.stage_costs.size()));
  }
  if ((traj.states.back() - target).norm() > target_tol) {
    throw ParameterError(fmt::format("trajectory {} ends {:.3g} away from the target", iter,
                                     (traj.states.back() - target).norm()));
  }
  if (live_.count(iter) != 0) {
    throw ParameterError(fmt::format("trajectory index {} already stored", iter));
  }
  std::vector<double> to_go(T + 1, 0.0);
  for (std::size_t t = T; t-- > 0;) to_go[t] = to_go[t + 1] + traj.stage_costs[t];
  const auto nu = traj.inputs.empty() ? Eigen::Index{0} : traj.inputs.front().size();
  live_.insert(iter);
  for (std::size_t t = 1; t <= T; ++t) {
    SafeSetEntry e;
    e.iter = iter;
    e.time = static_cast<int>(t);
    e.state = traj.states[t];
    e.input = t < T ? traj.inputs[t] : Eigen::VectorXd::Zero(nu);
    e.cost_to_go = to_go[t];
    insert(std::move(e));
  }
  rebuild_index();
}

void SampledSafeSet::insert(SafeSetEntry e) { entries_.push_back(std::move(e)); }

void SampledSafeSet::rebuild_index() {
  best_.clear();
  by_position_.clear();
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    by_position_[{e.iter, e.time}] = i;
    auto [it, inserted] = best_.emplace(state_key(e.state), i);
    if (inserted) continue;
    const auto& cur = entries_[it->second];
    if (e.cost_to_go < cur.cost_to_go || (e.cost_to_go == cur.cost_to_go && e.iter < cur.iter)) {
      it->second = i;
    }
  }
}

std::set<int> SampledSafeSet::prune_unsafe(
    const std::function<bool(const Eigen::VectorXd&)>& is_safe) {
  std::set<int> removed;
  for (const auto& e : entries_) {
    if (removed.count(e.iter) == 0 && !is_safe(e.state)) removed.insert(e.iter);
  }
  if (removed.empty()) return removed;
  std::erase_if(entries_, [&](const SafeSetEntry& e) { return removed.count(e.iter) != 0; });
  for (int i : removed) live_.erase(i);
  rebuild_index();
  return removed;
}

double SampledSafeSet::min_cost_to_go(const Eigen::VectorXd& x) const {
  const auto* e = best_entry(x);
  return e ? e->cost_to_go : std::numeric_limits<double>::infinity();
}

const SafeSetEntry* SampledSafeSet::best_entry(const Eigen::VectorXd& x) const {
  const auto it = best_.find(state_key(x));
  return it == best_.end() ? nullptr : &entries_[it->second];
}

const SafeSetEntry* SampledSafeSet::at(int iter, int time) const {
  const auto it = by_position_.find({iter, time});
  return it == by_position_.end() ? nullptr : &entries_[it->second];
}

const SafeSetEntry* SampledSafeSet::successor(const SafeSetEntry& e) const {
  return at(e.iter, e.time + 1);
}

std::vector<TerminalCandidate> SampledSafeSet::terminal_candidates() const {
  std::vector<TerminalCandidate> out;
  out.reserve(best_.size());
  for (const auto& [key, idx] : best_) {
    out.push_back({entries_[idx].state, entries_[idx].cost_to_go, idx});
  }
  return out;
}

void SampledSafeSet::write(std::ostream& out) const {
  out << "# iter time cost_to_go nx state... nu input...\n";
  for (const auto& e : entries_) {
    out << e.iter << ' ' << e.time << ' ' << fmt::format("{:.17g}", e.cost_to_go) << ' '
        << e.state.size();
    for (Eigen::Index i = 0; i < e.state.size(); ++i) out << ' ' << fmt::format("{:.17g}", e.state(i));
    out << ' ' << e.input.size();
    for (Eigen::Index i = 0; i < e.input.size(); ++i) out << ' ' << fmt::format("{:.17g}", e.input(i));
    out << '\n';
  }
}

SampledSafeSet SampledSafeSet::read(std::istream& in) {
  SampledSafeSet ss;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    SafeSetEntry e;
    Eigen::Index nx = 0, nu = 0;
    row >> e.iter >> e.time >> e.cost_to_go >> nx;
    if (!row || nx < 0) throw ParameterError(fmt::format("safe set line {} is malformed", lineno));
    e.state.resize(nx);
    for (Eigen::Index i = 0; i < nx; ++i) row >> e.state(i);
    row >> nu;
    if (!row || nu < 0) throw ParameterError(fmt::format("safe set line {} is malformed", lineno));
    e.input.resize(nu);
    for (Eigen::Index i = 0; i < nu; ++i) row >> e.input(i);
    if (!row) throw ParameterError(fmt::format("safe set line {} is truncated", lineno));
    ss.live_.insert(e.iter);
    ss.insert(std::move(e));
  }
  ss.rebuild_index();
  return ss;
}

bool state_is_dr_safe(const Eigen::VectorXd& x, const risk::AmbiguitySet& amb,
                      const ocp::ObstacleModel& obstacle, const risk::RiskSpec& spec) {
  return risk::dr_risk_satisfied(ocp::risk_values(obstacle, x, amb.center.support()), amb, spec);
}

std::set<int> prune_unsafe(SampledSafeSet& ss, const risk::AmbiguitySet& amb,
                           const ocp::ObstacleModel& obstacle, const risk::RiskSpec& spec) {
  return ss.prune_unsafe(
      [&](const Eigen::VectorXd& x) { return state_is_dr_safe(x, amb, obstacle, spec); });
}

}  // namespace drilmpc::safeset
