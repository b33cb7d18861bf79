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


// Acceptance checks. Each check prints one line "criterion N: PASS|FAIL ..."
// and the process exits nonzero if any check fails. Arguments select a
// subset by number; `--cli PATH` adds the command-line binary to the
// determinism check.

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "drilmpc/config.hpp"
#include "drilmpc/errors.hpp"
#include "drilmpc/iterate.hpp"
#include "drilmpc/linprog.hpp"
#include "drilmpc/report.hpp"
#include "drilmpc/risk.hpp"
#include "oracles.hpp"

using namespace drilmpc;
using Eigen::VectorXd;

namespace {

using Clock = std::chrono::steady_clock;

constexpr double kRiskTol = 1e-6;
constexpr double kOrderTol = 1e-9;

struct Verdict {
  bool ok = false;
  std::string detail;
};

std::string cli_path;
std::filesystem::path source_dir = DRILMPC_SOURCE_DIR;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

// ---------------------------------------------------------------- random data

dist::SupportPtr grid(std::size_t n) {
  return std::make_shared<const dist::SupportGrid>(dist::SupportGrid::evenly_spaced(0.0, 1.0, n));
}

dist::DiscreteDistribution random_pmf(std::mt19937_64& gen, const dist::SupportPtr& support, bool sparse) {
  std::exponential_distribution<double> e(1.0);
  std::bernoulli_distribution zero(sparse ? 0.4 : 0.0);
  std::vector<double> p(support->size());
  for (double& x : p) x = zero(gen) ? 0.0 : e(gen);
  if (std::accumulate(p.begin(), p.end(), 0.0) == 0.0) p[0] = 1.0;
  const double total = std::accumulate(p.begin(), p.end(), 0.0);
  for (double& x : p) x /= total;
  *std::max_element(p.begin(), p.end()) += 1.0 - std::accumulate(p.begin(), p.end(), 0.0);
  return {support, p};
}

std::vector<double> random_values(std::mt19937_64& gen, std::size_t n) {
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(gen);
  return v;
}

// ------------------------------------------------------ 1. worst-case duality

Verdict duality() {
  const auto start = Clock::now();
  std::mt19937_64 gen(101);
  std::uniform_real_distribution<double> ub(0.01, 1.0), ut(0.0, 1.0);
  double gap = 0.0, grid_err = 0.0;
  int small = 0;
  const int n = 1200;
  for (int trial = 0; trial < n; ++trial) {
    const auto s = grid(1 + static_cast<std::size_t>(trial % 20));
    const risk::AmbiguitySet amb(random_pmf(gen, s, trial % 2 == 0), ut(gen));
    const auto v = random_values(gen, s->size());
    const double beta = ub(gen);
    const double dual = risk::worst_case_cvar_dual(v, amb, beta);
    const double primal = risk::worst_case_cvar_primal(v, amb, beta);
    gap = std::max(gap, std::abs(dual - primal));
    if (s->size() <= 3) {
      ++small;
      const double ref = testing::worst_cvar_grid(v, amb.center.probs(), beta, amb.radius);
      grid_err = std::max({grid_err, std::abs(dual - ref), std::abs(primal - ref)});
    }
  }
  const double secs = seconds_since(start);
  return {gap <= 1e-6 && grid_err <= 1e-4 && secs < 60.0,
          fmt::format("{} instances, max |dual-primal| {:.2e}; {} with L<=3, max grid error {:.2e}; {:.1f} s", n, gap, small,
                 grid_err, secs)};
}

// ----------------------------------------------------------- 2. cvar oracles

Verdict cvar_oracles() {
  std::mt19937_64 gen(202);
  std::uniform_real_distribution<double> ub(0.01, 1.0);
  double grid_err = 0.0, mean_err = 0.0, zero_err = 0.0, one_err = 0.0;
  const int n = 1000;
  for (int trial = 0; trial < n; ++trial) {
    const auto s = grid(1 + static_cast<std::size_t>(trial % 20));
    const auto p = random_pmf(gen, s, trial % 3 == 0);
    const auto v = random_values(gen, s->size());
    const double beta = ub(gen);
    grid_err = std::max(grid_err, std::abs(risk::cvar(v, p, beta) - testing::cvar_grid(v, p.probs(), beta)));
    double mean = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) mean += p.probs()[i] * v[i];
    mean_err = std::max(mean_err, std::abs(risk::cvar(v, p, 1.0) - mean));
    const risk::AmbiguitySet singleton(p, 0.0);
    zero_err = std::max(zero_err, std::abs(risk::worst_case_cvar_dual(v, singleton, beta) - risk::cvar(v, p, beta)));
    const risk::AmbiguitySet everything(p, 1.0);
    one_err = std::max(one_err, std::abs(risk::worst_case_cvar_dual(v, everything, beta) -
                                         *std::max_element(v.begin(), v.end())));
  }
  return {grid_err <= 1e-8 && mean_err <= 1e-12 && zero_err <= 1e-8 && one_err <= 1e-8,
          fmt::format("{} instances, max error vs t-grid {:.2e}, beta=1 vs mean {:.2e}, theta=0 vs plain {:.2e}, "
                 "theta=1 vs max {:.2e}",
                 n, grid_err, mean_err, zero_err, one_err)};
}

// -------------------------------------------------------------- 9. lp oracle

linprog::LpProblem random_lp(std::mt19937_64& gen, int n, int m_ineq, int m_eq) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  linprog::LpProblem lp(n);
  for (int j = 0; j < n; ++j) {
    lp.cost(j) = u(gen);
    lp.lower(j) = -2.0 - std::abs(u(gen));
    lp.upper(j) = 2.0 + std::abs(u(gen));
  }
  VectorXd interior(n);
  for (int j = 0; j < n; ++j) interior(j) = 0.5 * u(gen);
  for (int i = 0; i < m_ineq; ++i) {
    Eigen::RowVectorXd row(n);
    for (int j = 0; j < n; ++j) row(j) = u(gen);
    lp.add_inequality(row, row.dot(interior) + u(gen) + 0.5);
  }
  for (int i = 0; i < m_eq; ++i) {
    Eigen::RowVectorXd row(n);
    for (int j = 0; j < n; ++j) row(j) = u(gen);
    lp.add_equality(row, row.dot(interior));
  }
  return lp;
}

testing::VertexResult vertex_oracle(const linprog::LpProblem& lp) {
  const auto n = lp.num_vars();
  const auto m = lp.a_ineq.rows();
  Eigen::MatrixXd G(m + 2 * n, n);
  VectorXd h(m + 2 * n);
  G.topRows(m) = lp.a_ineq;
  h.head(m) = lp.b_ineq;
  G.middleRows(m, n) = Eigen::MatrixXd::Identity(n, n);
  h.segment(m, n) = lp.upper;
  G.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
  h.tail(n) = -lp.lower;
  return testing::vertex_enumeration(lp.cost, G, h, lp.a_eq, lp.b_eq);
}

Verdict lp_oracle() {
  std::mt19937_64 gen(909);
  std::uniform_int_distribution<int> nd(1, 6), md(0, 8);
  double obj_err = 0.0, gap = 0.0;
  int optimal = 0, status_mismatch = 0;
  const int n = 1000;
  for (int trial = 0; trial < n; ++trial) {
    const int vars = nd(gen);
    const int m_eq = std::uniform_int_distribution<int>(0, std::min(2, vars - 1))(gen);
    const auto lp = random_lp(gen, vars, md(gen), m_eq);
    const auto sol = linprog::lp_solve(lp);
    const auto ref = vertex_oracle(lp);
    if (!ref.feasible) {
      if (sol.status != linprog::LpStatus::kInfeasible) ++status_mismatch;
      continue;
    }
    if (!sol.optimal()) {
      ++status_mismatch;
      continue;
    }
    ++optimal;
    obj_err = std::max(obj_err, std::abs(sol.objective - ref.objective));
    gap = std::max(gap, std::abs(sol.objective - sol.dual_objective(lp)));
  }
  return {status_mismatch == 0 && obj_err <= 1e-8 && gap <= 1e-7,
          fmt::format("{} LPs ({} optimal), status mismatches {}, max objective error {:.2e}, max duality gap {:.2e}", n,
                 optimal, status_mismatch, obj_err, gap)};
}

// ------------------------------------------------------ benchmark experiments

config::ExperimentConfig load(const std::string& name) {
  return config::parse_config(source_dir / "configs" / name);
}

const std::vector<std::string> kConfigs{"benchmark.json", "benchmark_slow.json"};

// Penetration written from the square's definition, without the library's
// face machinery.
double penetration(const ocp::ObstacleModel& obs, const VectorXd& x, double w) {
  const Eigen::Vector2d p(x(obs.position_coords[0]), x(obs.position_coords[1]));
  const Eigen::Vector2d rel = p - (obs.nominal_center + w * obs.direction);
  return std::max(0.0, obs.half_length - rel.cwiseAbs().maxCoeff());
}

double worst_risk(const ocp::Scenario& sc, const risk::AmbiguitySet& amb, const VectorXd& x) {
  std::vector<double> v;
  for (std::size_t i = 0; i < sc.support->size(); ++i) v.push_back(penetration(sc.obstacle, x, (*sc.support)[i]));
  // CVaR never exceeds the largest outcome.
  if (*std::max_element(v.begin(), v.end()) <= sc.risk.delta) return 0.0;
  return risk::worst_case_cvar_primal(v, amb, sc.risk.beta);
}

bool dr_safe(const ocp::Scenario& sc, const risk::AmbiguitySet& amb, const VectorXd& x) {
  return worst_risk(sc, amb, x) <= sc.risk.delta + kRiskTol;
}

struct Step {
  iterate::IterationState before;
  iterate::IterationState after;
};

struct Drive {
  config::ExperimentConfig cfg;
  safeset::Trajectory seed_traj;
  std::vector<Step> steps;
  std::string error;

  [[nodiscard]] const iterate::IterationRecord& record(std::size_t j) const { return steps[j].after.records.back(); }
};

Drive drive(config::ExperimentConfig cfg) {
  Drive d;
  d.cfg = std::move(cfg);
  const auto& sc = d.cfg.scenario;
  try {
    dist::Rng rng(d.cfg.seed);
    d.seed_traj = iterate::seed(sc, d.cfg.seed_inputs.empty() ? iterate::benchmark_seed_inputs(sc) : d.cfg.seed_inputs);
    auto state = iterate::initialize(sc, d.cfg.options, d.seed_traj, d.cfg.n0, rng);
    for (int j = 0; j < d.cfg.iterations; ++j) {
      auto next = iterate::run_iteration(state, sc, d.cfg.options, rng);
      d.steps.push_back({std::move(state), next});
      state = std::move(next);
    }
  } catch (const std::exception& e) {
    d.error = e.what();
  }
  return d;
}

std::map<std::string, Drive>& drives() {
  static std::map<std::string, Drive> cache;
  if (cache.empty()) {
    for (const auto& name : kConfigs) cache.emplace(name, drive(load(name)));
    // A small radius lets new data invalidate stored trajectories.
    auto small = load("benchmark_slow.json");
    small.options.theta = 5e-6;
    cache.emplace("benchmark_slow.json theta=5e-6", drive(small));
  }
  return cache;
}

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& p : parts) out += (out.empty() ? "" : "; ") + p;
  return out;
}

// Feasibility of an open-loop plan from x, checked from the problem data.
bool plan_feasible(const ocp::Scenario& sc, const safeset::SampledSafeSet& ss, const risk::AmbiguitySet& amb,
                   const VectorXd& x, const std::vector<VectorXd>& inputs, const VectorXd& terminal, int horizon) {
  if (static_cast<int>(inputs.size()) != horizon) return false;
  constexpr double tol = 1e-8;
  VectorXd xk = x;
  for (int k = 0; k < horizon; ++k) {
    const auto& u = inputs[static_cast<std::size_t>(k)];
    if (((u - sc.input_box.upper).array() > tol).any() || ((sc.input_box.lower - u).array() > tol).any()) {
      return false;
    }
    xk = sc.dynamics.a * xk + sc.dynamics.b * u;
    if (k + 1 < horizon) {
      if (((xk - sc.state_box.upper).array() > tol).any() || ((sc.state_box.lower - xk).array() > tol).any()) {
        return false;
      }
      if (!dr_safe(sc, amb, xk)) return false;
    }
  }
  if ((xk - terminal).norm() > tol) return false;
  return std::any_of(ss.entries().begin(), ss.entries().end(),
                     [&](const safeset::SafeSetEntry& e) { return (e.state - terminal).norm() <= 1e-9; });
}

// ------------------------------------------------- 3. recursive feasibility

Verdict recursive_feasibility() {
  std::vector<std::string> parts;
  bool ok = true;
  for (const auto& [name, d] : drives()) {
    if (!d.error.empty()) {
      ok = false;
      parts.push_back(name + ": " + d.error);
      continue;
    }
    const auto& sc = d.cfg.scenario;
    const int K = d.cfg.options.mpc.horizon;
    int solves = 0, bad_plans = 0, shifts = 0, bad_shifts = 0, lib_failures = 0;
    for (std::size_t j = 0; j < d.steps.size(); ++j) {
      const auto& before = d.steps[j].before;
      const auto& run = d.record(j).run;
      lib_failures += run.shift_failures;
      if (static_cast<int>(run.plans.size()) != run.mpc_steps) ++bad_plans;
      for (std::size_t t = 0; t < run.plans.size(); ++t) {
        const auto& plan = run.plans[t];
        ++solves;
        if (!plan_feasible(sc, before.safe_set, before.amb, run.traj.states[t], plan.inputs, plan.terminal.state, K) ||
            plan.inputs.front() != run.traj.inputs[t]) {
          ++bad_plans;
        }
        if (t + 1 == run.plans.size()) continue;
        // Drop the first input, append the input stored with the terminal
        // state, and end on that state's successor.
        const auto& entry = before.safe_set.entries()[plan.terminal.entry];
        const auto& stored = before.stored.at(entry.iter);
        std::vector<VectorXd> inputs(plan.inputs.begin() + 1, plan.inputs.end());
        const auto time = static_cast<std::size_t>(entry.time);
        VectorXd terminal;
        if (time < stored.inputs.size()) {
          inputs.push_back(stored.inputs[time]);
          terminal = stored.states[time + 1];
        } else {
          inputs.push_back(VectorXd::Zero(sc.dynamics.input_dim()));
          terminal = stored.states[time];
        }
        ++shifts;
        if (!plan_feasible(sc, before.safe_set, before.amb, run.traj.states[t + 1], inputs, terminal, K)) {
          ++bad_shifts;
        }
      }
    }
    ok = ok && bad_plans == 0 && bad_shifts == 0 && lib_failures == 0;
    parts.push_back(fmt::format("{}: {} solves, {} infeasible plans, {} shifted candidates, {} infeasible", name,
                           solves, bad_plans, shifts, bad_shifts + lib_failures));
  }
  return {ok, join(parts)};
}

// ------------------------------------------------------ 4. iteration safety

Verdict iteration_safety() {
  std::vector<std::string> parts;
  bool ok = true;
  for (const auto& [name, d] : drives()) {
    if (!d.error.empty()) {
      ok = false;
      parts.push_back(name + ": " + d.error);
      continue;
    }
    int states = 0, unsafe = 0;
    double worst = 0.0;
    for (std::size_t j = 0; j < d.steps.size(); ++j) {
      for (const auto& x : d.record(j).run.traj.states) {
        ++states;
        const double r = worst_risk(d.cfg.scenario, d.steps[j].before.amb, x);
        worst = std::max(worst, r);
        if (r > d.cfg.scenario.risk.delta + kRiskTol) ++unsafe;
      }
    }
    ok = ok && unsafe == 0;
    parts.push_back(fmt::format("{}: {} states, {} above delta, largest worst-case CVaR {:.3g}", name, states, unsafe,
                           worst));
  }
  return {ok, join(parts)};
}

// ------------------------------------------------------------ 5. convergence

Verdict convergence() {
  std::vector<std::string> parts;
  bool ok = true;
  for (const auto& [name, d] : drives()) {
    if (!d.error.empty()) {
      ok = false;
      parts.push_back(name + ": " + d.error);
      continue;
    }
    const auto& sc = d.cfg.scenario;
    int runs = 0, lyapunov = 0, unconverged = 0, max_steps = 0;
    for (std::size_t j = 0; j < d.steps.size(); ++j) {
      const auto& run = d.record(j).run;
      ++runs;
      for (std::size_t t = 0; t + 1 < run.j_values.size(); ++t) {
        if (run.j_values[t + 1] > run.j_values[t] - run.traj.stage_costs[t] + 1e-4) {
          ++lyapunov;
          break;
        }
      }
      max_steps = std::max(max_steps, run.mpc_steps);
      const auto& x_end = run.traj.states[static_cast<std::size_t>(run.mpc_steps)];
      if (run.mpc_steps > 500 || (x_end - sc.target).norm() > 1e-2 || run.traj.states.back() != sc.target) {
        ++unconverged;
      }
    }
    ok = ok && lyapunov == 0 && unconverged == 0;
    parts.push_back(fmt::format("{}: {} runs, {} with a Lyapunov violation, {} unconverged, at most {} MPC steps",
                           name, runs, lyapunov, unconverged, max_steps));
  }
  return {ok, join(parts)};
}

// ------------------------------------------------------ 6. cross-iteration

using EntryKey = std::tuple<int, int, std::vector<double>, double>;

std::set<EntryKey> entry_set(const safeset::SampledSafeSet& ss) {
  std::set<EntryKey> out;
  for (const auto& e : ss.entries()) {
    out.emplace(e.iter, e.time, std::vector<double>(e.state.data(), e.state.data() + e.state.size()), e.cost_to_go);
  }
  return out;
}

Verdict cross_iteration() {
  std::vector<std::string> parts;
  bool ok = true;
  for (const auto& name : kConfigs) {
    auto cfg = load(name);
    cfg.options.freeze_dataset = true;
    cfg.options.theta = 0.5;
    cfg.options.theta_decay = 0.3;
    const auto d = drive(cfg);
    if (!d.error.empty()) {
      ok = false;
      parts.push_back(name + ": " + d.error);
      continue;
    }
    int not_superset = 0, regressions = 0, data_changed = 0;
    double prev = d.seed_traj.total_cost();
    double worst_rise = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < d.steps.size(); ++j) {
      const auto& [before, after] = d.steps[j];
      if (after.samples.indices() != before.samples.indices() || !(after.amb.radius < before.amb.radius)) {
        ++data_changed;
      }
      const auto old_set = entry_set(before.safe_set);
      const auto new_set = entry_set(after.safe_set);
      if (!std::includes(new_set.begin(), new_set.end(), old_set.begin(), old_set.end())) ++not_superset;
      const double cost = d.record(j).cost;
      worst_rise = std::max(worst_rise, cost - prev);
      if (cost > prev + 1e-3) ++regressions;
      prev = cost;
    }
    ok = ok && not_superset == 0 && regressions == 0 && data_changed == 0;
    parts.push_back(fmt::format("{}: {} iterations, {} safe sets not nested, {} cost rises above 1e-3 (largest {:.3g}), "
                           "{} ambiguity sets not shrinking",
                           name, d.steps.size(), not_superset, regressions, worst_rise, data_changed));
  }
  return {ok, join(parts)};
}

// ------------------------------------------------------------ 7. sweep trend

struct SweepPoint {
  double clearance = 0.0;
  int collisions = 0;
  double final_cost = 0.0;
};

Verdict sweep_trend() {
  const auto start = Clock::now();
  std::vector<std::string> parts;
  bool ok = true;
  constexpr int kSeeds = 5;
  for (const auto& name : kConfigs) {
    const auto cfg = load(name);
    int clear_ok = 0, coll_ok = 0, cost_ok = 0, varied = 0;
    std::string error;
    for (int s = 1; s <= kSeeds && error.empty(); ++s) {
      std::vector<SweepPoint> pts;
      for (double theta : cfg.sweep_thetas) {
        auto opts = cfg.options;
        opts.theta = theta;
        try {
          const auto rep = iterate::run_experiment(cfg.scenario, opts, cfg.seed_inputs, cfg.n0, cfg.iterations,
                                                   static_cast<std::uint64_t>(s));
          const auto& last = rep.records.back();
          pts.push_back({report::min_clearance(cfg.scenario.obstacle, last.run.traj), rep.colliding_iterations(),
                         last.cost});
        } catch (const std::exception& e) {
          error = fmt::format("seed {} theta {}: {}", s, theta, e.what());
          break;
        }
      }
      if (!error.empty()) break;
      bool c = true, k = true, f = true;
      for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        c = c && pts[i + 1].clearance >= pts[i].clearance - kOrderTol;
        k = k && pts[i + 1].collisions <= pts[i].collisions;
        f = f && pts[i + 1].final_cost >= pts[i].final_cost - kOrderTol;
      }
      varied += pts.front().final_cost != pts.back().final_cost || pts.front().clearance != pts.back().clearance ||
                pts.front().collisions != pts.back().collisions;
      clear_ok += c;
      coll_ok += k;
      cost_ok += f;
      std::string row;
      for (const auto& p : pts) row += fmt::format(" ({:.4f}, {}, {:.4f})", p.clearance, p.collisions, p.final_cost);
      spdlog::info("sweep {} seed {}:{}", name, s, row);
    }
    if (!error.empty()) {
      ok = false;
      parts.push_back(name + ": " + error);
      continue;
    }
    ok = ok && clear_ok >= 4 && coll_ok >= 4 && cost_ok >= 4;
    parts.push_back(fmt::format(
        "{}: seeds ordered by clearance {}/{}, collisions {}/{}, final cost {}/{}; outcomes vary with the radius in {}/{}",
        name, clear_ok, kSeeds, coll_ok, kSeeds, cost_ok, kSeeds, varied, kSeeds));
  }
  const double secs = seconds_since(start);
  parts.push_back(fmt::format("{:.0f} s", secs));
  return {ok && secs < 1800.0, join(parts)};
}

// ------------------------------------------------------- 8. pruning oracle

bool close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > tol) return false;
  }
  return true;
}

Verdict pruning_oracle() {
  std::vector<std::string> parts;
  bool ok = true;
  for (const auto& [name, d] : drives()) {
    if (!d.error.empty()) {
      ok = false;
      parts.push_back(name + ": " + d.error);
      continue;
    }
    const auto& sc = d.cfg.scenario;
    int mismatches = 0, removed_total = 0;
    for (std::size_t j = 0; j < d.steps.size(); ++j) {
      const auto& [before, after] = d.steps[j];
      const auto& rec = d.record(j);
      const int it = static_cast<int>(j) + 1;

      // Dataset and ambiguity set after the iteration.
      std::vector<int> samples = before.samples.indices();
      if (!d.cfg.options.freeze_dataset) samples.insert(samples.end(), rec.run.samples.begin(), rec.run.samples.end());
      std::vector<double> probs(sc.support->size(), 0.0);
      for (int s : samples) probs[static_cast<std::size_t>(s)] += 1.0;
      for (double& p : probs) p /= static_cast<double>(samples.size());
      const double theta = d.cfg.options.theta * std::pow(d.cfg.options.theta_decay, static_cast<double>(j));
      const risk::AmbiguitySet amb(dist::DiscreteDistribution(sc.support, probs), theta);

      // Candidates are the surviving indices plus the new one.
      std::map<int, const safeset::Trajectory*> trajs;
      for (int i : before.safe_set.live_iters()) trajs[i] = &before.stored.at(i);
      trajs[it] = &rec.run.traj;
      std::set<int> unsafe, kept;
      std::set<EntryKey> expected;
      for (const auto& [i, traj] : trajs) {
        bool safe = true;
        for (std::size_t t = 1; t < traj->states.size() && safe; ++t) safe = dr_safe(sc, amb, traj->states[t]);
        if (!safe) {
          unsafe.insert(i);
          continue;
        }
        kept.insert(i);
        const std::size_t T = traj->inputs.size();
        std::vector<double> ctg(T + 1, 0.0);
        for (std::size_t t = T; t-- > 0;) ctg[t] = traj->stage_costs[t] + ctg[t + 1];
        for (std::size_t t = 1; t <= T; ++t) {
          const auto& x = traj->states[t];
          expected.emplace(i, static_cast<int>(t), std::vector<double>(x.data(), x.data() + x.size()), ctg[t]);
        }
      }
      removed_total += static_cast<int>(unsafe.size());
      const std::vector<std::pair<const char*, bool>> parts_ok{
          {"dataset", samples == after.samples.indices()},
          {"empirical distribution", close(probs, after.amb.center.probs(), 1e-15)},
          {"radius", theta == after.amb.radius},
          {"removed indices", unsafe == rec.removed},
          {"surviving indices", kept == after.safe_set.live_iters()},
          {"entries", expected == entry_set(after.safe_set)}};
      for (const auto& [what, good] : parts_ok) {
        if (!good) spdlog::warn("{} iteration {}: {} differ", name, it, what);
      }
      if (std::any_of(parts_ok.begin(), parts_ok.end(), [](const auto& p) { return !p.second; })) ++mismatches;
    }
    ok = ok && mismatches == 0;
    parts.push_back(fmt::format("{}: {} iterations, {} removed indices, {} mismatches", name, d.steps.size(),
                           removed_total, mismatches));
  }
  return {ok, join(parts)};
}

// ------------------------------------------------------------ 10. determinism

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::vector<std::string> kReportFiles{"trajectories.csv", "summary.json", "obstacles.csv"};

bool same_reports(const std::filesystem::path& a, const std::filesystem::path& b) {
  for (const auto& f : kReportFiles) {
    if (!std::filesystem::exists(a / f) || slurp(a / f) != slurp(b / f)) return false;
  }
  return true;
}

Verdict determinism() {
  const auto root = std::filesystem::temp_directory_path() / "drilmpc_acceptance";
  std::filesystem::remove_all(root);
  std::vector<std::string> parts;
  bool ok = true;
  for (const auto& name : kConfigs) {
    const auto cfg = load(name);
    const auto stem = std::filesystem::path(name).stem().string();
    for (const char* run : {"a", "b"}) {
      const auto rep = iterate::run_experiment(cfg.scenario, cfg.options, cfg.seed_inputs, cfg.n0, cfg.iterations,
                                               cfg.seed);
      report::emit_report(rep, cfg, root / stem / run);
    }
    const bool same = same_reports(root / stem / "a", root / stem / "b");
    ok = ok && same;
    parts.push_back(fmt::format("{} library runs {}", name, same ? "identical" : "differ"));
    if (!cli_path.empty()) {
      for (const char* run : {"cli_a", "cli_b"}) {
        const auto out = root / stem / run;
        const auto cmd = fmt::format("DRILMPC_LOG=warn \"{}\" run --config \"{}\" --out \"{}\"", cli_path,
                                (source_dir / "configs" / name).string(), out.string());
        if (std::system(cmd.c_str()) != 0) ok = false;
      }
      const bool cli_same = same_reports(root / stem / "cli_a", root / stem / "cli_b");
      const bool matches_lib = same_reports(root / stem / "a", root / stem / "cli_a");
      ok = ok && cli_same && matches_lib;
      parts.push_back(fmt::format("{} command-line runs {}{}", name, cli_same ? "identical" : "differ",
                             matches_lib ? " and match the library" : " from the library"));
    }
  }
  std::filesystem::remove_all(root);
  return {ok, join(parts)};
}

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--cli" && i + 1 < argc) {
      cli_path = argv[++i];
    } else if (arg == "-v") {
      spdlog::set_level(spdlog::level::info);
    } else {
      selected.insert(std::stoi(arg));
    }
  }
  const std::vector<std::pair<int, std::function<Verdict()>>> checks{
      {1, duality},         {2, cvar_oracles},     {3, recursive_feasibility}, {4, iteration_safety},
      {5, convergence},     {6, cross_iteration},  {7, sweep_trend},           {8, pruning_oracle},
      {9, lp_oracle},       {10, determinism}};
  int failed = 0;
  for (const auto& [id, check] : checks) {
    if (!selected.empty() && !selected.contains(id)) continue;
    const auto start = Clock::now();
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    fmt::print("criterion {}: {}  {}  [{:.1f} s]\n", id, v.ok ? "PASS" : "FAIL", v.detail,
                seconds_since(start));
    std::fflush(stdout);
    failed += v.ok ? 0 : 1;
  }
  return failed == 0 ? 0 : 1;
}
