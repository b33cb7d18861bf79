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

#include "drilmpc/config.hpp"

#include <fstream>
#include <memory>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "drilmpc/distributions.hpp"
#include "drilmpc/errors.hpp"

namespace drilmpc::config {

using nlohmann::json;

namespace {

// Best-effort source line of a key path: each key is searched after the
// line where its parent was found.
int line_of(const std::string& text, const std::vector<std::string>& path) {
  std::size_t pos = 0;
  bool found = false;
  for (const auto& key : path) {
    const auto at = text.find('"' + key + '"', pos);
    if (at == std::string::npos) break;
    pos = at;
    found = true;
  }
  if (!found) return 0;
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(pos), '\n'));
}

class Reader {
 public:
  Reader(const std::string& text, std::string origin) : text_(text), origin_(std::move(origin)) {}

  [[noreturn]] void fail(const std::vector<std::string>& path, const std::string& what) const {
    std::string joined;
    for (const auto& k : path) joined += (joined.empty() ? "" : ".") + k;
    const int line = line_of(text_, path);
    throw ConfigError(line > 0 ? fmt::format("{}:{}: {}: {}", origin_, line, joined, what)
                               : fmt::format("{}: {}: {}", origin_, joined, what));
  }

  void only(const json& obj, const std::vector<std::string>& path, const std::set<std::string>& allowed) const {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, value] : obj.items()) {
      if (allowed.count(key) == 0) {
        auto p = path;
        p.push_back(key);
        fail(p, "unknown key");
      }
    }
  }

  template <typename T>
  void get(const json& obj, std::vector<std::string> path, const std::string& key, T& out) const {
    if (!obj.contains(key)) return;
    path.push_back(key);
    try {
      out = obj.at(key).get<T>();
    } catch (const json::exception&) {
      fail(path, "has the wrong type");
    }
  }

  void vector(const json& obj, std::vector<std::string> path, const std::string& key, Eigen::VectorXd& out) const {
    if (!obj.contains(key)) return;
    path.push_back(key);
    std::vector<double> v;
    try {
      v = obj.at(key).get<std::vector<double>>();
    } catch (const json::exception&) {
      fail(path, "expected a list of numbers");
    }
    out = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  void matrix(const json& obj, std::vector<std::string> path, const std::string& key, Eigen::MatrixXd& out) const {
    if (!obj.contains(key)) return;
    path.push_back(key);
    std::vector<std::vector<double>> rows;
    try {
      rows = obj.at(key).get<std::vector<std::vector<double>>>();
    } catch (const json::exception&) {
      fail(path, "expected a row-major list of rows");
    }
    if (rows.empty()) fail(path, "matrix has no rows");
    out.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.front().size()) fail(path, "rows have different lengths");
      for (std::size_t j = 0; j < rows[i].size(); ++j) {
        out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
      }
    }
  }

 private:
  const std::string& text_;
  std::string origin_;
};

json to_list(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json to_rows(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(to_list(m.row(i).transpose()));
  return rows;
}

void parse_scenario(const Reader& rd, const json& s, ExperimentConfig& cfg) {
  const std::vector<std::string> at{"scenario"};
  rd.only(s, at,
          {"A", "B", "Q", "R", "start", "target", "state_lower", "state_upper", "input_lower", "input_upper",
           "obstacle", "support", "true_distribution", "seed_inputs"});
  auto& sc = cfg.scenario;
  Eigen::MatrixXd a = sc.dynamics.a, b = sc.dynamics.b, q = sc.cost.q, r = sc.cost.r;
  rd.matrix(s, at, "A", a);
  rd.matrix(s, at, "B", b);
  rd.matrix(s, at, "Q", q);
  rd.matrix(s, at, "R", r);
  rd.vector(s, at, "start", sc.start);
  rd.vector(s, at, "target", sc.target);
  Eigen::VectorXd xl = sc.state_box.lower, xu = sc.state_box.upper, ul = sc.input_box.lower, uu = sc.input_box.upper;
  rd.vector(s, at, "state_lower", xl);
  rd.vector(s, at, "state_upper", xu);
  rd.vector(s, at, "input_lower", ul);
  rd.vector(s, at, "input_upper", uu);
  try {
    sc.dynamics = ocp::LinearDynamics(a, b);
    sc.cost = ocp::QuadraticStageCost(q, r, sc.target);
    sc.state_box = ocp::BoxSet(xl, xu);
    sc.input_box = ocp::BoxSet(ul, uu);
  } catch (const std::invalid_argument& e) {
    rd.fail(at, e.what());
  }

  if (s.contains("obstacle")) {
    const auto& o = s.at("obstacle");
    const std::vector<std::string> ap{"scenario", "obstacle"};
    rd.only(o, ap, {"center", "direction", "side_length", "position_coords"});
    Eigen::VectorXd center = sc.obstacle.nominal_center, dir = sc.obstacle.direction;
    rd.vector(o, ap, "center", center);
    rd.vector(o, ap, "direction", dir);
    if (center.size() != 2) rd.fail({"scenario", "obstacle", "center"}, "expected 2 entries");
    if (dir.size() != 2) rd.fail({"scenario", "obstacle", "direction"}, "expected 2 entries");
    sc.obstacle.nominal_center = center;
    sc.obstacle.direction = dir;
    double side = 2.0 * sc.obstacle.half_length;
    rd.get(o, ap, "side_length", side);
    sc.obstacle.half_length = side / 2.0;
    std::vector<Eigen::Index> coords(sc.obstacle.position_coords.begin(), sc.obstacle.position_coords.end());
    rd.get(o, ap, "position_coords", coords);
    if (coords.size() != 2) rd.fail({"scenario", "obstacle", "position_coords"}, "expected 2 entries");
    sc.obstacle.position_coords = {coords[0], coords[1]};
  }

  if (s.contains("support")) {
    const auto& g = s.at("support");
    const std::vector<std::string> ap{"scenario", "support"};
    rd.only(g, ap, {"first", "last", "count", "points"});
    try {
      if (g.contains("points")) {
        std::vector<double> pts;
        rd.get(g, ap, "points", pts);
        sc.support = std::make_shared<const dist::SupportGrid>(pts);
      } else {
        double first = -0.5, last = 0.5;
        std::size_t count = 15;
        rd.get(g, ap, "first", first);
        rd.get(g, ap, "last", last);
        rd.get(g, ap, "count", count);
        sc.support = std::make_shared<const dist::SupportGrid>(dist::SupportGrid::evenly_spaced(first, last, count));
      }
    } catch (const std::invalid_argument& e) {
      rd.fail(ap, e.what());
    }
  }

  const json td = s.contains("true_distribution") ? s.at("true_distribution")
                                                   : json{{"family", "beta_binomial"}, {"alpha", 10.0}, {"beta", 15.0}};
  const std::vector<std::string> ap{"scenario", "true_distribution"};
  rd.only(td, ap, {"family", "alpha", "beta", "probs"});
  std::string family = "beta_binomial";
  rd.get(td, ap, "family", family);
  try {
    if (family == "beta_binomial") {
      double alpha = 10.0, beta = 15.0;
      rd.get(td, ap, "alpha", alpha);
      rd.get(td, ap, "beta", beta);
      sc.true_probs = dist::beta_binomial_pmf(static_cast<int>(sc.support->size()), alpha, beta);
    } else if (family == "explicit") {
      rd.get(td, ap, "probs", sc.true_probs);
      (void)dist::DiscreteDistribution(sc.support, sc.true_probs);
    } else {
      rd.fail({"scenario", "true_distribution", "family"}, "must be \"beta_binomial\" or \"explicit\"");
    }
  } catch (const std::invalid_argument& e) {
    rd.fail(ap, e.what());
  }

  if (s.contains("seed_inputs")) {
    Eigen::MatrixXd rows;
    rd.matrix(s, at, "seed_inputs", rows);
    cfg.seed_inputs.clear();
    for (Eigen::Index i = 0; i < rows.rows(); ++i) cfg.seed_inputs.emplace_back(rows.row(i).transpose());
  }
}

void parse_algorithm(const Reader& rd, const json& a, ExperimentConfig& cfg) {
  const std::vector<std::string> at{"algorithm"};
  rd.only(a, at,
          {"horizon", "beta", "delta", "theta", "theta_decay", "confidence", "n0", "iterations", "eps_term", "t_max",
           "max_candidates", "seed", "freeze_dataset"});
  auto& o = cfg.options;
  rd.get(a, at, "horizon", o.mpc.horizon);
  rd.get(a, at, "beta", cfg.scenario.risk.beta);
  rd.get(a, at, "delta", cfg.scenario.risk.delta);
  rd.get(a, at, "theta", o.theta);
  rd.get(a, at, "theta_decay", o.theta_decay);
  rd.get(a, at, "confidence", o.confidence);
  rd.get(a, at, "n0", cfg.n0);
  rd.get(a, at, "iterations", cfg.iterations);
  rd.get(a, at, "eps_term", o.mpc.eps_term);
  rd.get(a, at, "t_max", o.mpc.t_max);
  rd.get(a, at, "max_candidates", o.mpc.max_candidates);
  rd.get(a, at, "seed", cfg.seed);
  rd.get(a, at, "freeze_dataset", o.freeze_dataset);
}

void check(const Reader& rd, bool ok, const std::vector<std::string>& path, const std::string& what) {
  if (!ok) rd.fail(path, what);
}

void validate_with(const Reader& rd, const ExperimentConfig& cfg) {
  const auto& o = cfg.options;
  const auto& risk = cfg.scenario.risk;
  check(rd, risk.beta >= 1e-6 && risk.beta <= 1.0, {"algorithm", "beta"}, "must lie in [1e-6, 1]");
  check(rd, risk.delta > 0.0, {"algorithm", "delta"}, "must be positive");
  check(rd, o.theta >= 0.0 && o.theta <= 1.0, {"algorithm", "theta"}, "must lie in [0, 1]");
  check(rd, o.theta_decay > 0.0 && o.theta_decay <= 1.0, {"algorithm", "theta_decay"}, "must lie in (0, 1]");
  check(rd, o.confidence >= 0.0 && o.confidence < 1.0, {"algorithm", "confidence"}, "must lie in [0, 1)");
  check(rd, o.mpc.horizon >= 1, {"algorithm", "horizon"}, "must be at least 1");
  check(rd, cfg.n0 >= 1, {"algorithm", "n0"}, "must be at least 1");
  check(rd, cfg.iterations >= 0, {"algorithm", "iterations"}, "must be nonnegative");
  check(rd, o.mpc.eps_term > 0.0, {"algorithm", "eps_term"}, "must be positive");
  check(rd, o.mpc.t_max >= 1, {"algorithm", "t_max"}, "must be at least 1");
  check(rd, o.mpc.max_candidates >= 0, {"algorithm", "max_candidates"}, "must be nonnegative");
  for (double t : cfg.sweep_thetas) check(rd, t >= 0.0 && t <= 1.0, {"sweep", "thetas"}, "entries must lie in [0, 1]");
  for (const auto& u : cfg.seed_inputs) {
    check(rd, u.size() == cfg.scenario.dynamics.input_dim(), {"scenario", "seed_inputs"}, "rows must match the input size");
  }
  try {
    cfg.scenario.validate();
  } catch (const std::invalid_argument& e) {
    rd.fail({"scenario"}, e.what());
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  const std::string empty;
  validate_with(Reader(empty, "<config>"), *this);
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(fmt::format("{}: {}", origin, e.what()));
  }
  const Reader rd(text, origin);
  rd.only(root, {}, {"scenario", "algorithm", "sweep", "output"});
  ExperimentConfig cfg;
  parse_scenario(rd, root.contains("scenario") ? root.at("scenario") : json::object(), cfg);
  if (root.contains("algorithm")) parse_algorithm(rd, root.at("algorithm"), cfg);
  if (root.contains("sweep")) {
    rd.only(root.at("sweep"), {"sweep"}, {"thetas"});
    rd.get(root.at("sweep"), {"sweep"}, "thetas", cfg.sweep_thetas);
  }
  if (root.contains("output")) {
    rd.only(root.at("output"), {"output"}, {"directory", "checkpoints"});
    rd.get(root.at("output"), {"output"}, "directory", cfg.output.directory);
    rd.get(root.at("output"), {"output"}, "checkpoints", cfg.output.checkpoints);
  }
  validate_with(rd, cfg);
  return cfg;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file {}", path.string()));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path.string());
}

std::string dump_config(const ExperimentConfig& cfg) {
  const auto& sc = cfg.scenario;
  json seed_rows = json::array();
  for (const auto& u : cfg.seed_inputs) seed_rows.push_back(to_list(u));
  std::vector<double> points;
  for (std::size_t i = 0; i < sc.support->size(); ++i) points.push_back((*sc.support)[i]);
  json scenario{
      {"A", to_rows(sc.dynamics.a)},
      {"B", to_rows(sc.dynamics.b)},
      {"Q", to_rows(sc.cost.q)},
      {"R", to_rows(sc.cost.r)},
      {"start", to_list(sc.start)},
      {"target", to_list(sc.target)},
      {"state_lower", to_list(sc.state_box.lower)},
      {"state_upper", to_list(sc.state_box.upper)},
      {"input_lower", to_list(sc.input_box.lower)},
      {"input_upper", to_list(sc.input_box.upper)},
      {"obstacle",
       {{"center", to_list(sc.obstacle.nominal_center)},
        {"direction", to_list(sc.obstacle.direction)},
        {"side_length", 2.0 * sc.obstacle.half_length},
        {"position_coords", {sc.obstacle.position_coords[0], sc.obstacle.position_coords[1]}}}},
      {"support", {{"points", points}}},
      {"true_distribution", {{"family", "explicit"}, {"probs", sc.true_probs}}},
  };
  if (!cfg.seed_inputs.empty()) scenario["seed_inputs"] = seed_rows;
  const auto& o = cfg.options;
  json root{
      {"scenario", scenario},
      {"algorithm",
       {{"horizon", o.mpc.horizon},
        {"beta", sc.risk.beta},
        {"delta", sc.risk.delta},
        {"theta", o.theta},
        {"theta_decay", o.theta_decay},
        {"confidence", o.confidence},
        {"n0", cfg.n0},
        {"iterations", cfg.iterations},
        {"eps_term", o.mpc.eps_term},
        {"t_max", o.mpc.t_max},
        {"max_candidates", o.mpc.max_candidates},
        {"seed", cfg.seed},
        {"freeze_dataset", o.freeze_dataset}}},
      {"sweep", {{"thetas", cfg.sweep_thetas}}},
      {"output", {{"directory", cfg.output.directory}, {"checkpoints", cfg.output.checkpoints}}},
  };
  return root.dump(2);
}

}  // namespace drilmpc::config
