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

#include "drilmpc/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "drilmpc/errors.hpp"

namespace drilmpc::report {

using Eigen::VectorXd;
using nlohmann::json;

namespace {

std::string num(double v) { return fmt::format("{:.17g}", v); }

std::string header(Eigen::Index nx, Eigen::Index nu) {
  std::string h = "iter,t";
  if (nx == 4 && nu == 2) return h + ",z,y,vz,vy,az,ay,stage_cost,collision";
  for (Eigen::Index i = 0; i < nx; ++i) h += fmt::format(",x{}", i);
  for (Eigen::Index i = 0; i < nu; ++i) h += fmt::format(",u{}", i);
  return h + ",stage_cost,collision";
}

void append_rows(std::string& out, int iter, const safeset::Trajectory& traj, const std::vector<bool>& collisions,
                 Eigen::Index nu) {
  for (std::size_t t = 0; t < traj.states.size(); ++t) {
    out += fmt::format("{},{}", iter, t);
    const auto& x = traj.states[t];
    for (Eigen::Index i = 0; i < x.size(); ++i) out += "," + num(x(i));
    const VectorXd u = t < traj.inputs.size() ? traj.inputs[t] : VectorXd::Zero(nu);
    for (Eigen::Index i = 0; i < u.size(); ++i) out += "," + num(u(i));
    out += "," + num(t < traj.stage_costs.size() ? traj.stage_costs[t] : 0.0);
    out += fmt::format(",{}\n", t > 0 && t - 1 < collisions.size() && collisions[t - 1] ? 1 : 0);
  }
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ParameterError(fmt::format("cannot open {}", p.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw ParameterError(fmt::format("cannot write {}", p.string()));
  out << text;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(cell);
  return out;
}

}  // namespace

double min_clearance(const ocp::ObstacleModel& obstacle, const safeset::Trajectory& traj) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : traj.states) best = std::min(best, (obstacle.position(x) - obstacle.nominal_center).norm());
  return best;
}

std::string trajectories_csv(const iterate::ExperimentReport& report) {
  const auto nx = report.scenario.dynamics.state_dim();
  const auto nu = report.scenario.dynamics.input_dim();
  std::string out = header(nx, nu) + "\n";
  if (!report.seed_traj.states.empty()) append_rows(out, 0, report.seed_traj, {}, nu);
  for (const auto& r : report.records) append_rows(out, r.iter, r.run.traj, r.run.collisions, nu);
  return out;
}

std::string obstacles_csv(const iterate::ExperimentReport& report) {
  const auto& support = *report.scenario.support;
  const auto& obs = report.scenario.obstacle;
  std::string out = "iter,t,atom,w,center_z,center_y\n";
  auto row = [&](int iter, std::size_t t, int atom) {
    const double w = support[static_cast<std::size_t>(atom)];
    const auto c = obs.center(w);
    out += fmt::format("{},{},{},{},{},{}\n", iter, t, atom, num(w), num(c(0)), num(c(1)));
  };
  for (std::size_t k = 0; k < report.initial_samples.size(); ++k) row(0, k + 1, report.initial_samples[k]);
  for (const auto& r : report.records) {
    for (std::size_t k = 0; k < r.run.samples.size(); ++k) row(r.iter, k + 1, r.run.samples[k]);
  }
  return out;
}

std::string summary_json(const iterate::ExperimentReport& report, const config::ExperimentConfig& cfg) {
  json iterations = json::array();
  std::vector<int> colliding;
  json pruning = json::array();
  for (const auto& r : report.records) {
    std::vector<double> mpc_costs(r.run.traj.stage_costs.begin(),
                                  r.run.traj.stage_costs.begin() + r.run.mpc_steps);
    const auto steps = std::count(r.run.collisions.begin(), r.run.collisions.end(), true);
    iterations.push_back({{"iter", r.iter},
                          {"length", r.run.length()},
                          {"mpc_steps", r.run.mpc_steps},
                          {"cost", r.cost},
                          {"theta", r.theta},
                          {"collided", r.run.collided()},
                          {"collision_steps", steps},
                          {"removed", std::vector<int>(r.removed.begin(), r.removed.end())},
                          {"num_samples", r.num_samples},
                          {"true_safe", r.true_safe},
                          {"min_clearance", min_clearance(report.scenario.obstacle, r.run.traj)},
                          {"shift_checks", r.run.shift_checks},
                          {"shift_failures", r.run.shift_failures},
                          {"lyapunov", mpc::lyapunov_check(r.run.j_values, mpc_costs)},
                          {"objectives", r.run.j_values}});
    if (r.run.collided()) colliding.push_back(r.iter);
    pruning.push_back(std::vector<int>(r.removed.begin(), r.removed.end()));
  }
  json root{{"seed", report.seed},
            {"seed_cost", report.seed_traj.total_cost()},
            {"costs", [&] {
               std::vector<double> c;
               for (const auto& r : report.records) c.push_back(r.cost);
               return c;
             }()},
            {"collision_iterations", colliding},
            {"colliding_iterations", report.colliding_iterations()},
            {"safety_frequency", report.safety_frequency()},
            {"pruning", pruning},
            {"final_safe_set_size", report.final_safe_set_size},
            {"iterations", iterations},
            {"config", json::parse(config::dump_config(cfg))}};
  root["config"].erase("output");
  return root.dump(2) + "\n";
}

ReportPaths emit_report(const iterate::ExperimentReport& report, const config::ExperimentConfig& cfg,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  ReportPaths paths{dir / "trajectories.csv", dir / "summary.json", dir / "obstacles.csv"};
  write_file(paths.trajectories, trajectories_csv(report));
  write_file(paths.summary, summary_json(report, cfg));
  write_file(paths.obstacles, obstacles_csv(report));
  return paths;
}

std::vector<CsvRow> parse_trajectories_csv(const std::string& text, Eigen::Index nx, Eigen::Index nu) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header(nx, nu)) throw ParameterError("unexpected trajectory CSV header");
  std::vector<CsvRow> rows;
  const auto width = static_cast<std::size_t>(4 + nx + nu);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line, ',');
    if (cells.size() != width) throw ParameterError(fmt::format("trajectory CSV row has {} cells", cells.size()));
    CsvRow r;
    r.iter = std::stoi(cells[0]);
    r.t = std::stoi(cells[1]);
    r.x.resize(nx);
    r.u.resize(nu);
    std::size_t c = 2;
    for (Eigen::Index i = 0; i < nx; ++i) r.x(i) = std::stod(cells[c++]);
    for (Eigen::Index i = 0; i < nu; ++i) r.u(i) = std::stod(cells[c++]);
    r.stage_cost = std::stod(cells[c++]);
    r.collision = cells[c] == "1";
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<CheckItem> check_report(const std::filesystem::path& dir) {
  const json summary = json::parse(slurp(dir / "summary.json"));
  const auto cfg = config::parse_config_text(summary.at("config").dump(), (dir / "summary.json").string());
  const auto& sc = cfg.scenario;
  const auto nx = sc.dynamics.state_dim();
  const auto nu = sc.dynamics.input_dim();
  const auto rows = parse_trajectories_csv(slurp(dir / "trajectories.csv"), nx, nu);

  std::map<int, std::vector<int>> samples;  // iteration -> atoms in step order
  {
    std::istringstream in(slurp(dir / "obstacles.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto cells = split(line, ',');
      samples[std::stoi(cells.at(0))].push_back(std::stoi(cells.at(2)));
    }
  }
  std::map<int, std::vector<const CsvRow*>> by_iter;
  for (const auto& r : rows) by_iter[r.iter].push_back(&r);

  std::vector<CheckItem> items;
  auto add = [&](std::string name, bool ok, std::string detail) {
    items.push_back({std::move(name), ok, std::move(detail)});
  };

  const auto& iters = summary.at("iterations");
  std::size_t expected_rows = by_iter.count(0) ? by_iter[0].size() : 0;
  for (const auto& it : iters) expected_rows += it.at("length").get<std::size_t>() + 1;
  add("row count", rows.size() == expected_rows, fmt::format("{} rows, expected {}", rows.size(), expected_rows));

  int dyn_bad = 0, box_bad = 0, cost_bad = 0, end_bad = 0;
  for (const auto& [iter, traj] : by_iter) {
    for (std::size_t t = 0; t < traj.size(); ++t) {
      const auto& r = *traj[t];
      if (r.t != static_cast<int>(t)) ++dyn_bad;
      if (!sc.state_box.contains(r.x, 1e-8)) ++box_bad;
      if (t + 1 < traj.size()) {
        if (!sc.input_box.contains(r.u, 1e-8)) ++box_bad;
        if ((ocp::step(sc.dynamics, r.x, r.u) - traj[t + 1]->x).norm() > 1e-8) ++dyn_bad;
        const double rc = ocp::stage_cost(sc.cost, r.x, r.u);
        if (!(std::abs(rc - r.stage_cost) <= 1e-9 * std::max(1.0, rc))) ++cost_bad;
      }
    }
    if (traj.front()->x != sc.start || traj.back()->x != sc.target) ++end_bad;
  }
  add("dynamics", dyn_bad == 0, fmt::format("{} inconsistent transitions", dyn_bad));
  add("boxes", box_bad == 0, fmt::format("{} box violations", box_bad));
  add("stage costs", cost_bad == 0, fmt::format("{} mismatched stage costs", cost_bad));
  add("endpoints", end_bad == 0, fmt::format("{} trajectories not from start to target", end_bad));

  int total_bad = 0, collision_bad = 0, risk_bad = 0, flags_bad = 0, colliding = 0;
  dist::SampleSet data;
  data.append(samples[0]);
  for (const auto& it : iters) {
    const int j = it.at("iter").get<int>();
    const auto& traj = by_iter[j];
    double total = 0.0;
    for (std::size_t t = 0; t + 1 < traj.size(); ++t) total += traj[t]->stage_cost;
    const double cost = it.at("cost").get<double>();
    if (!(std::isfinite(cost) && cost >= 0.0 && std::abs(total - cost) <= 1e-9 * std::max(1.0, cost))) ++total_bad;

    const auto& w = samples[j];
    if (w.size() + 1 != traj.size()) ++collision_bad;
    bool collided = false;
    for (std::size_t t = 1; t < traj.size() && t - 1 < w.size(); ++t) {
      const bool hit = ocp::g_eval(sc.obstacle, traj[t]->x, (*sc.support)[static_cast<std::size_t>(w[t - 1])]) > 0.0;
      if (hit != traj[t]->collision) ++collision_bad;
      collided = collided || hit;
    }
    if (collided != it.at("collided").get<bool>()) ++collision_bad;
    colliding += collided ? 1 : 0;

    const double theta = cfg.options.theta_at(j - 1);
    if (theta != it.at("theta").get<double>()) ++risk_bad;
    const risk::AmbiguitySet amb(dist::empirical(data, sc.support), theta);
    for (const auto* r : traj) {
      if (!risk::dr_risk_satisfied(ocp::risk_values(sc.obstacle, r->x, *sc.support), amb, sc.risk)) ++risk_bad;
    }
    if (!cfg.options.freeze_dataset) data.append(w);
    if (!it.at("lyapunov").get<bool>() || it.at("shift_failures").get<int>() != 0) ++flags_bad;
  }
  add("iteration costs", total_bad == 0, fmt::format("{} iteration costs disagree with their rows", total_bad));
  add("collisions", collision_bad == 0 && colliding == summary.at("colliding_iterations").get<int>(),
      fmt::format("{} collision flags disagree with obstacles.csv", collision_bad));
  add("risk constraint", risk_bad == 0, fmt::format("{} states violate their iteration's DR constraint", risk_bad));
  add("solver certificates", flags_bad == 0, fmt::format("{} iterations with a failed Lyapunov or shift check", flags_bad));
  return items;
}

}  // namespace drilmpc::report
