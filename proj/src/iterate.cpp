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

#include "drilmpc/iterate.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <json.hpp>
#include <spdlog/spdlog.h>

#include "drilmpc/errors.hpp"

namespace drilmpc::iterate {

using Eigen::VectorXd;

void IterationOptions::validate() const {
  if (!(theta >= 0.0 && theta <= 1.0)) throw ParameterError(fmt::format("theta must lie in [0, 1], got {}", theta));
  if (!(theta_decay > 0.0 && theta_decay <= 1.0)) {
    throw ParameterError(fmt::format("theta_decay must lie in (0, 1], got {}", theta_decay));
  }
  if (mpc.horizon < 1) throw ParameterError(fmt::format("horizon must be at least 1, got {}", mpc.horizon));
  if (!(mpc.eps_term > 0.0)) throw ParameterError("eps_term must be positive");
  if (mpc.t_max < 1) throw ParameterError("t_max must be positive");
}

double IterationOptions::theta_at(int j) const { return theta * std::pow(theta_decay, j); }

std::vector<VectorXd> benchmark_seed_inputs(const ocp::Scenario& scenario) {
  if (scenario.dynamics.state_dim() != 4 || scenario.dynamics.input_dim() != 2) {
    throw SeedingError("the default seed needs a planar double integrator; give seed inputs explicitly");
  }
  std::vector<VectorXd> u;
  for (Eigen::Index axis = 0; axis < 2; ++axis) {
    const double dist = scenario.target(axis) - scenario.start(axis);
    if (dist == 0.0) continue;
    const double reach = std::min(scenario.input_box.upper(axis), -scenario.input_box.lower(axis));
    if (!(reach > 0.0)) throw SeedingError("input box leaves no room to accelerate");
    // Accelerating for n steps and braking for n covers a * n^2.
    const int n = static_cast<int>(std::ceil(std::sqrt(std::abs(dist) / reach) - 1e-12));
    const double a = dist / (static_cast<double>(n) * n);
    for (int k = 0; k < 2 * n; ++k) {
      VectorXd v = VectorXd::Zero(2);
      v(axis) = k < n ? a : -a;
      u.push_back(v);
    }
  }
  return u;
}

safeset::Trajectory seed(const ocp::Scenario& scenario, const std::vector<VectorXd>& inputs) {
  safeset::Trajectory traj;
  traj.states = mpc::rollout(scenario.dynamics, scenario.start, inputs);
  traj.inputs = inputs;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    traj.stage_costs.push_back(ocp::stage_cost(scenario.cost, traj.states[t], inputs[t]));
  }
  const double miss = (traj.states.back() - scenario.target).norm();
  if (miss > 1e-9) throw SeedingError(fmt::format("seed ends {:.3g} away from the target", miss));
  traj.states.back() = scenario.target;
  const auto& support = *scenario.support;
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    const auto& x = traj.states[t];
    if (!scenario.state_box.contains(x, 1e-9)) throw SeedingError(fmt::format("seed leaves the state box at t={}", t));
    if (t < inputs.size() && !scenario.input_box.contains(inputs[t], 1e-9)) {
      throw SeedingError(fmt::format("seed input leaves the input box at t={}", t));
    }
    for (std::size_t l = 0; l < support.size(); ++l) {
      const double g = ocp::g_eval(scenario.obstacle, x, support[l]);
      if (g > scenario.risk.delta) {
        throw SeedingError(fmt::format("seed state t={} has g={:.3g} > delta at atom {} (w={})", t, g, l, support[l]));
      }
    }
  }
  return traj;
}

IterationState initialize(const ocp::Scenario& scenario, const IterationOptions& options,
                          const safeset::Trajectory& seed_traj, std::size_t n0, dist::Rng& rng) {
  options.validate();
  if (n0 == 0) throw ParameterError("at least one initial sample is needed");
  dist::SampleSet samples;
  samples.append(dist::sample(scenario.true_distribution(), rng, n0));
  IterationState state{0, samples,
                       risk::AmbiguitySet(dist::empirical(samples, scenario.support), options.theta_at(0),
                                          options.confidence),
                       {}, {}, {}};
  state.safe_set.append_trajectory(0, seed_traj, scenario.target);
  state.stored.emplace(0, seed_traj);
  return state;
}

std::vector<mpc::WarmStart> prefix_warm_starts(const IterationState& state, int horizon) {
  std::vector<mpc::WarmStart> out;
  for (const auto& [i, traj] : state.stored) {
    const auto T = traj.length();
    if (T == 0) continue;
    mpc::WarmStart w;
    for (std::size_t k = 0; k < static_cast<std::size_t>(horizon); ++k) {
      w.inputs.push_back(k < T ? traj.inputs[k] : VectorXd::Zero(traj.inputs.front().size()));
    }
    w.terminal = traj.states[std::min<std::size_t>(static_cast<std::size_t>(horizon), T)];
    out.push_back(std::move(w));
  }
  return out;
}

bool trajectory_true_safe(const ocp::Scenario& scenario, const safeset::Trajectory& traj) {
  const auto truth = scenario.true_distribution();
  return std::all_of(traj.states.begin(), traj.states.end(), [&](const VectorXd& x) {
    const auto g = ocp::risk_values(scenario.obstacle, x, *scenario.support);
    return risk::cvar(g, truth, scenario.risk.beta) <= scenario.risk.delta + risk::kFeasibilityTolerance;
  });
}

IterationState run_iteration(IterationState state, const ocp::Scenario& scenario,
                             const IterationOptions& options, dist::Rng& rng) {
  const int j = state.j + 1;
  IterationRecord rec;
  rec.iter = j;
  rec.theta = state.amb.radius;
  rec.run = mpc::dr_mpc(scenario, state.safe_set, state.amb, rng, options.mpc,
                        prefix_warm_starts(state, options.mpc.horizon));
  rec.cost = rec.run.traj.total_cost();
  rec.true_safe = trajectory_true_safe(scenario, rec.run.traj);

  if (!options.freeze_dataset) state.samples.append(rec.run.samples);
  state.amb = risk::AmbiguitySet(dist::empirical(state.samples, scenario.support), options.theta_at(j),
                                 options.confidence);
  if (rec.run.length() > 0) {
    state.safe_set.append_trajectory(j, rec.run.traj, scenario.target);
    state.stored.emplace(j, rec.run.traj);
  }
  rec.removed = safeset::prune_unsafe(state.safe_set, state.amb, scenario.obstacle, scenario.risk);
  for (int i : rec.removed) state.stored.erase(i);
  rec.num_samples = state.samples.size();
  state.j = j;
  spdlog::info("iteration {}: T={} cost={:.6g} collided={} removed={} safe-set={}", j, rec.run.length(), rec.cost,
               rec.run.collided(), rec.removed.size(), state.safe_set.size());
  state.records.push_back(std::move(rec));
  return state;
}

int ExperimentReport::colliding_iterations() const {
  return static_cast<int>(
      std::count_if(records.begin(), records.end(), [](const IterationRecord& r) { return r.run.collided(); }));
}

double ExperimentReport::safety_frequency() const {
  if (records.empty()) return 1.0;
  const auto safe =
      std::count_if(records.begin(), records.end(), [](const IterationRecord& r) { return r.true_safe; });
  return static_cast<double>(safe) / static_cast<double>(records.size());
}

ExperimentReport run_experiment(const ocp::Scenario& scenario, const IterationOptions& options,
                                const std::vector<VectorXd>& seed_inputs, std::size_t n0, int iterations,
                                std::uint64_t seed_value, const std::filesystem::path& checkpoint_dir) {
  scenario.validate();
  options.validate();
  if (iterations < 0) throw ParameterError("iteration count must be nonnegative");
  dist::Rng rng(seed_value);
  ExperimentReport report{scenario, options, seed_value, {}, {}, {}, 0};
  report.seed_traj = seed(scenario, seed_inputs.empty() ? benchmark_seed_inputs(scenario) : seed_inputs);
  auto state = initialize(scenario, options, report.seed_traj, n0, rng);
  report.initial_samples = state.samples.indices();
  for (int j = 0; j < iterations; ++j) {
    state = run_iteration(std::move(state), scenario, options, rng);
    if (!checkpoint_dir.empty()) write_checkpoint(state, rng, checkpoint_dir / fmt::format("iter_{:03d}", state.j));
  }
  report.records = std::move(state.records);
  report.final_safe_set_size = state.safe_set.size();
  return report;
}

namespace {

void write_vector(std::ostream& out, const VectorXd& v) {
  out << v.size();
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ' ' << fmt::format("{:.17g}", v(i));
  out << '\n';
}

VectorXd read_vector(std::istream& in) {
  Eigen::Index n = -1;
  in >> n;
  if (!in || n < 0) throw ParameterError("malformed vector in checkpoint");
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) in >> v(i);
  if (!in) throw ParameterError("truncated vector in checkpoint");
  return v;
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ParameterError(fmt::format("cannot open {}", p.string()));
  return in;
}

}  // namespace

void write_checkpoint(const IterationState& state, const dist::Rng& rng, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "safeset.txt");
    state.safe_set.write(out);
  }
  {
    std::ofstream out(dir / "samples.txt");
    out << state.samples.batch_sizes().size();
    for (auto b : state.samples.batch_sizes()) out << ' ' << b;
    out << '\n';
    for (int i : state.samples.indices()) out << i << ' ';
    out << '\n';
  }
  {
    std::ofstream out(dir / "trajectories.txt");
    out << state.stored.size() << '\n';
    for (const auto& [i, traj] : state.stored) {
      out << i << ' ' << traj.length() << '\n';
      for (const auto& x : traj.states) write_vector(out, x);
      for (const auto& u : traj.inputs) write_vector(out, u);
      for (double c : traj.stage_costs) out << fmt::format("{:.17g}", c) << ' ';
      out << '\n';
    }
  }
  nlohmann::json meta{{"iteration", state.j}, {"theta", state.amb.radius}, {"rng", rng.state()}};
  std::ofstream(dir / "state.json") << meta.dump(2) << '\n';
}

IterationState read_checkpoint(const std::filesystem::path& dir, const ocp::Scenario& scenario,
                               const IterationOptions& options, dist::Rng& rng) {
  nlohmann::json meta;
  {
    auto in = open_in(dir / "state.json");
    meta = nlohmann::json::parse(in);
  }
  rng.restore(meta.at("rng").get<std::string>());
  const int j = meta.at("iteration").get<int>();

  dist::SampleSet samples;
  {
    auto in = open_in(dir / "samples.txt");
    std::size_t batches = 0;
    in >> batches;
    std::vector<std::size_t> sizes(batches);
    for (auto& b : sizes) in >> b;
    for (auto b : sizes) {
      std::vector<int> batch(b);
      for (auto& i : batch) in >> i;
      samples.append(batch);
    }
    if (!in) throw ParameterError("malformed samples checkpoint");
  }
  auto in_ss = open_in(dir / "safeset.txt");
  IterationState state{j, samples,
                       risk::AmbiguitySet(dist::empirical(samples, scenario.support), options.theta_at(j),
                                          options.confidence),
                       safeset::SampledSafeSet::read(in_ss), {}, {}};
  auto in = open_in(dir / "trajectories.txt");
  std::size_t count = 0;
  in >> count;
  for (std::size_t n = 0; n < count; ++n) {
    int i = 0;
    std::size_t T = 0;
    in >> i >> T;
    safeset::Trajectory traj;
    for (std::size_t t = 0; t <= T; ++t) traj.states.push_back(read_vector(in));
    for (std::size_t t = 0; t < T; ++t) traj.inputs.push_back(read_vector(in));
    traj.stage_costs.resize(T);
    for (auto& c : traj.stage_costs) in >> c;
    if (!in) throw ParameterError("malformed trajectories checkpoint");
    state.stored.emplace(i, std::move(traj));
  }
  return state;
}

}  // namespace drilmpc::iterate
