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

#include "drilmpc/mpc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <span>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "drilmpc/errors.hpp"
#include "drilmpc/qp.hpp"

namespace drilmpc::mpc {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kBoxTol = 1e-8;
constexpr double kCutTol = 1e-7;
constexpr int kMaxCutRounds = 300;
constexpr int kMaxFaceRounds = 12;
constexpr double kElasticPenalty = 1e4;
constexpr double kInf = std::numeric_limits<double>::infinity();

// States as affine functions of the stacked inputs U = [u_0; ...; u_{K-1}]:
// x_k = phi[k] x + gamma[k] U.
struct Condensed {
  int horizon = 0;
  Index n = 0;
  Index m = 0;
  std::vector<VectorXd> free;  // phi[k] x
  std::vector<MatrixXd> gamma;
  qp::QpProblem base;  // cost and boxes; the terminal equality is set per candidate
  double constant = 0.0;
};

Condensed condense(const FiniteHorizonProblem& p) {
  const auto& dyn = p.scenario.dynamics;
  const auto& cost = p.scenario.cost;
  Condensed c;
  c.horizon = p.horizon;
  c.n = dyn.state_dim();
  c.m = dyn.input_dim();
  const Index K = p.horizon;
  const Index M = c.m * K;
  c.free.resize(K + 1);
  c.gamma.resize(K + 1);
  c.free[0] = p.x;
  c.gamma[0] = MatrixXd::Zero(c.n, M);
  for (Index k = 1; k <= K; ++k) {
    c.free[k] = dyn.a * c.free[k - 1];
    c.gamma[k] = dyn.a * c.gamma[k - 1];
    c.gamma[k].middleCols((k - 1) * c.m, c.m) += dyn.b;
  }

  auto& qp = c.base;
  qp.hessian = MatrixXd::Zero(M, M);
  qp.linear = VectorXd::Zero(M);
  for (Index k = 0; k < K; ++k) {
    const VectorXd e = c.free[k] - cost.target;
    const MatrixXd qg = cost.q * c.gamma[k];
    qp.hessian.noalias() += 2.0 * c.gamma[k].transpose() * qg;
    qp.linear.noalias() += 2.0 * qg.transpose() * e;
    c.constant += e.dot(cost.q * e);
    qp.hessian.block(k * c.m, k * c.m, c.m, c.m) += 2.0 * cost.r;
  }
  qp.a_eq = c.gamma[K];
  qp.b_eq = VectorXd::Zero(c.n);

  const auto& ub = p.scenario.input_box;
  const auto& xb = p.scenario.state_box;
  const Index rows = 2 * M + 2 * c.n * (K - 1);
  qp.a_ineq = MatrixXd::Zero(rows, M);
  qp.b_ineq = VectorXd::Zero(rows);
  Index r = 0;
  for (Index k = 0; k < K; ++k) {
    for (Index i = 0; i < c.m; ++i) {
      qp.a_ineq(r, k * c.m + i) = 1.0;
      qp.b_ineq(r++) = ub.upper(i);
      qp.a_ineq(r, k * c.m + i) = -1.0;
      qp.b_ineq(r++) = -ub.lower(i);
    }
  }
  for (Index k = 1; k < K; ++k) {
    for (Index i = 0; i < c.n; ++i) {
      qp.a_ineq.row(r) = c.gamma[k].row(i);
      qp.b_ineq(r++) = xb.upper(i) - c.free[k](i);
      qp.a_ineq.row(r) = -c.gamma[k].row(i);
      qp.b_ineq(r++) = c.free[k](i) - xb.lower(i);
    }
  }
  return c;
}

std::vector<VectorXd> split_inputs(const VectorXd& u, Index m) {
  std::vector<VectorXd> out;
  for (Index k = 0; k < u.size() / m; ++k) out.emplace_back(u.segment(k * m, m));
  return out;
}

VectorXd stack_inputs(const std::vector<VectorXd>& inputs) {
  const Index m = inputs.empty() ? 0 : inputs.front().size();
  VectorXd u(m * static_cast<Index>(inputs.size()));
  for (std::size_t k = 0; k < inputs.size(); ++k) u.segment(static_cast<Index>(k) * m, m) = inputs[k];
  return u;
}

double trajectory_cost(const ocp::QuadraticStageCost& cost, const std::vector<VectorXd>& states,
                       const std::vector<VectorXd>& inputs) {
  double total = 0.0;
  for (std::size_t k = 0; k < inputs.size(); ++k) total += ocp::stage_cost(cost, states[k], inputs[k]);
  return total;
}

bool state_safe(const FiniteHorizonProblem& p, const VectorXd& x) {
  return risk::dr_risk_satisfied(ocp::risk_values(p.scenario.obstacle, x, *p.scenario.support), p.amb,
                                 p.scenario.risk);
}

double risk_excess(const FiniteHorizonProblem& p, const VectorXd& x) {
  const auto g = ocp::risk_values(p.scenario.obstacle, x, *p.scenario.support);
  return risk::worst_case_cvar_dual(g, p.amb, p.scenario.risk.beta) - p.scenario.risk.delta;
}

// Active face per atom at every k = 1..K-1, flattened k-major.
using Faces = std::vector<int>;

// Pairs of adjacent faces; restricting the choice to one pair fixes the side
// on which the plan passes each realization.
constexpr std::array<std::array<int, 2>, 4> kCorners{{{0, 2}, {0, 3}, {1, 2}, {1, 3}}};
constexpr std::array<int, 4> kAllFaces{0, 1, 2, 3};

Faces faces_at(const FiniteHorizonProblem& p, const Condensed& c, const VectorXd& u,
               std::span<const int> allowed = kAllFaces) {
  const auto& support = *p.scenario.support;
  Faces f;
  f.reserve(static_cast<std::size_t>(c.horizon - 1) * support.size());
  for (int k = 1; k < c.horizon; ++k) {
    const VectorXd x = c.free[k] + c.gamma[k] * u;
    const Eigen::Vector2d pos = p.scenario.obstacle.position(x);
    for (std::size_t l = 0; l < support.size(); ++l) {
      const auto depth = ocp::face_depths(p.scenario.obstacle, pos, support[l]);
      int best = allowed.front();
      for (int j : allowed) {
        if (depth[static_cast<std::size_t>(j)] < depth[static_cast<std::size_t>(best)]) best = j;
      }
      f.push_back(best);
    }
  }
  return f;
}

// Surrogate penetration at step k for frozen faces: max(0, d - A U).
struct Surrogate {
  MatrixXd a;
  VectorXd d;
};

std::vector<Surrogate> surrogates(const FiniteHorizonProblem& p, const Condensed& c, const Faces& faces) {
  const auto& obs = p.scenario.obstacle;
  const auto& support = *p.scenario.support;
  const auto& normals = ocp::face_normals();
  const Index L = static_cast<Index>(support.size());
  const auto [i0, i1] = obs.position_coords;
  std::vector<Surrogate> out;
  for (int k = 1; k < c.horizon; ++k) {
    Surrogate s{MatrixXd(L, c.gamma[k].cols()), VectorXd(L)};
    for (Index l = 0; l < L; ++l) {
      const auto& h = normals[static_cast<std::size_t>(
          faces[static_cast<std::size_t>((k - 1) * L + l)])];
      s.a.row(l) = h(0) * c.gamma[k].row(i0) + h(1) * c.gamma[k].row(i1);
      s.d(l) = obs.half_length + h.dot(obs.center(support[static_cast<std::size_t>(l)])) -
               (h(0) * c.free[k](i0) + h(1) * c.free[k](i1));
    }
    out.push_back(std::move(s));
  }
  return out;
}

// Kelley cutting planes on the convex surrogate problem.
// Kelley cutting planes on the worst-case CVaR of the surrogates. With a
// positive penalty the cuts are softened by one shared slack.
std::optional<VectorXd> solve_surrogate(const FiniteHorizonProblem& p, const qp::QpProblem& with_terminal,
                                        const std::vector<Surrogate>& sur, double penalty = 0.0) {
  const double delta = p.scenario.risk.delta;
  const double beta = p.scenario.risk.beta;
  const Index n = with_terminal.num_vars();
  const bool elastic = penalty > 0.0;
  qp::QpProblem problem = with_terminal;
  if (elastic) {
    const Index nv = n + 1;
    problem.hessian.conservativeResize(nv, nv);
    problem.hessian.row(n).setZero();
    problem.hessian.col(n).setZero();
    problem.hessian(n, n) = 1.0;
    problem.linear.conservativeResize(nv);
    problem.linear(n) = penalty;
    problem.a_eq.conservativeResize(Eigen::NoChange, nv);
    problem.a_eq.col(n).setZero();
    problem.a_ineq.conservativeResize(Eigen::NoChange, nv);
    problem.a_ineq.col(n).setZero();
    Eigen::RowVectorXd nonneg = Eigen::RowVectorXd::Zero(nv);
    nonneg(n) = -1.0;
    problem.add_inequality(nonneg, 0.0);
  }
  std::vector<double> s;
  for (int round = 0; round < kMaxCutRounds; ++round) {
    const auto sol = qp::qp_solve(problem);
    if (!sol.optimal()) return std::nullopt;
    const VectorXd u = sol.x.head(n);
    const double slack = elastic ? sol.x(n) : 0.0;
    bool cut = false;
    for (const auto& sk : sur) {
      const VectorXd raw = sk.d - sk.a * u;
      s.assign(raw.data(), raw.data() + raw.size());
      double top = 0.0;
      for (double& v : s) top = std::max(top, v = std::max(v, 0.0));
      if (top <= delta + slack) continue;
      const auto wc = risk::worst_case_cvar_dual_detail(s, p.amb, beta);
      if (wc.value <= delta + slack + kCutTol) continue;
      Eigen::RowVectorXd grad = Eigen::RowVectorXd::Zero(problem.num_vars());
      for (Index l = 0; l < raw.size(); ++l) {
        if (s[static_cast<std::size_t>(l)] > 0.0) {
          grad.head(n) -= wc.tail_weights[static_cast<std::size_t>(l)] * sk.a.row(l);
        }
      }
      if (elastic) grad(n) = -1.0;
      problem.add_inequality(grad, delta - wc.value + grad.head(n).dot(u));
      cut = true;
    }
    if (!cut) return u;
  }
  spdlog::debug("cutting planes hit the round cap");
  return std::nullopt;
}

struct CandidateSolve {
  VectorXd u;
  double objective = kInf;
};

class Solver {
 public:
  explicit Solver(const FiniteHorizonProblem& p) : p_(p), c_(condense(p)) {}

  qp::QpProblem with_terminal(const VectorXd& terminal) const {
    qp::QpProblem q = c_.base;
    q.b_eq = terminal - c_.free[static_cast<std::size_t>(c_.horizon)];
    return q;
  }

  double objective(const VectorXd& u, double cost_to_go) const {
    const auto inputs = split_inputs(u, c_.m);
    return trajectory_cost(p_.scenario.cost, rollout(p_.scenario.dynamics, p_.x, inputs), inputs) +
           cost_to_go;
  }

  bool exact_safe(const VectorXd& u) const {
    for (int k = 1; k < c_.horizon; ++k) {
      if (!state_safe(p_, c_.free[static_cast<std::size_t>(k)] + c_.gamma[static_cast<std::size_t>(k)] * u)) {
        return false;
      }
    }
    return true;
  }

  double worst_excess(const VectorXd& u) const {
    double worst = -kInf;
    for (int k = 1; k < c_.horizon; ++k) {
      worst = std::max(worst, risk_excess(p_, c_.free[static_cast<std::size_t>(k)] +
                                                  c_.gamma[static_cast<std::size_t>(k)] * u));
    }
    return worst;
  }

  Faces faces(const VectorXd& u, std::span<const int> allowed = kAllFaces) const {
    return faces_at(p_, c_, u, allowed);
  }

  // Sequential convex steps from the given faces; every accepted iterate
  // passes the exact oracle.
  CandidateSolve refine(const qp::QpProblem& base, Faces faces, double cost_to_go) const {
    CandidateSolve best;
    for (int round = 0; round < kMaxFaceRounds; ++round) {
      const auto sur = surrogates(p_, c_, faces);
      auto u = solve_surrogate(p_, base, sur);
      if (!u) u = solve_surrogate(p_, base, sur, kElasticPenalty);
      if (!u) break;
      if (exact_safe(*u)) {
        const double obj = objective(*u, cost_to_go);
        if (obj < best.objective) best = {*u, obj};
      }
      auto next = faces_at(p_, c_, *u);
      if (next == faces) break;
      faces = std::move(next);
    }
    return best;
  }

  int horizon() const { return c_.horizon; }
  Index input_dim() const { return c_.m; }

 private:
  const FiniteHorizonProblem& p_;
  Condensed c_;
};

}  // namespace

std::vector<VectorXd> rollout(const ocp::LinearDynamics& dyn, const VectorXd& x,
                              const std::vector<VectorXd>& inputs) {
  std::vector<VectorXd> states{x};
  states.reserve(inputs.size() + 1);
  for (const auto& u : inputs) states.push_back(ocp::step(dyn, states.back(), u));
  return states;
}

void FiniteHorizonProblem::validate() const {
  if (horizon < 1) throw ParameterError(fmt::format("horizon must be at least 1, got {}", horizon));
  if (candidates.empty()) throw ParameterError("terminal candidate set is empty");
  if (x.size() != scenario.dynamics.state_dim()) {
    throw DimensionError(fmt::format("state has size {}, dynamics expect {}", x.size(),
                                     scenario.dynamics.state_dim()));
  }
  if (max_candidates < 0) throw ParameterError("max_candidates must be nonnegative");
  for (const auto& w : warm_starts) {
    if (static_cast<int>(w.inputs.size()) != horizon) {
      throw DimensionError(fmt::format("warm start has {} inputs for horizon {}", w.inputs.size(), horizon));
    }
  }
}

bool sequence_feasible(const FiniteHorizonProblem& p, const std::vector<VectorXd>& inputs,
                       const VectorXd& terminal, double terminal_tol) {
  if (static_cast<int>(inputs.size()) != p.horizon) return false;
  const auto states = rollout(p.scenario.dynamics, p.x, inputs);
  for (int k = 0; k < p.horizon; ++k) {
    const auto& x = states[static_cast<std::size_t>(k)];
    if (!p.scenario.input_box.contains(inputs[static_cast<std::size_t>(k)], kBoxTol)) return false;
    if (!p.scenario.state_box.contains(x, kBoxTol)) return false;
    if (!state_safe(p, x)) return false;
  }
  return (states.back() - terminal).norm() <= terminal_tol;
}

FhpSolution solve_fhp(const FiniteHorizonProblem& p) {
  p.validate();
  if (!state_safe(p, p.x)) {
    throw InfeasibleError(fmt::format("initial state violates the risk constraint by {:.3g}", risk_excess(p, p.x)));
  }
  const Solver solver(p);
  const std::size_t nc = p.candidates.size();

  std::map<safeset::StateKey, std::size_t> index;
  for (std::size_t i = 0; i < nc; ++i) index.emplace(safeset::state_key(p.candidates[i].state), i);

  // Risk-free bound per candidate.
  std::vector<double> bound(nc, kInf);
  std::vector<VectorXd> free_u(nc);
  std::vector<qp::QpProblem> problems(nc);
  for (std::size_t i = 0; i < nc; ++i) {
    problems[i] = solver.with_terminal(p.candidates[i].state);
    const auto sol = qp::qp_solve(problems[i]);
    if (!sol.optimal()) continue;
    free_u[i] = sol.x;
    bound[i] = solver.objective(sol.x, p.candidates[i].cost_to_go);
  }

  std::vector<std::vector<Faces>> seeds(nc);
  std::vector<std::size_t> order;
  for (const auto& w : p.warm_starts) {
    const auto it = index.find(safeset::state_key(w.terminal));
    if (it == index.end()) continue;
    seeds[it->second].push_back(solver.faces(stack_inputs(w.inputs)));
    if (std::find(order.begin(), order.end(), it->second) == order.end()) order.push_back(it->second);
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < nc; ++i) {
    if (std::isfinite(bound[i]) && seeds[i].empty()) rest.push_back(i);
  }
  std::stable_sort(rest.begin(), rest.end(), [&](std::size_t a, std::size_t b) { return bound[a] < bound[b]; });
  if (p.max_candidates > 0 && rest.size() > static_cast<std::size_t>(p.max_candidates)) {
    rest.resize(static_cast<std::size_t>(p.max_candidates));
  }
  order.insert(order.end(), rest.begin(), rest.end());

  CandidateSolve best;
  std::size_t best_index = nc;
  int solved = 0;
  double nearest = kInf;
  for (const std::size_t i : order) {
    if (!std::isfinite(bound[i]) || bound[i] >= best.objective) continue;
    ++solved;
    const double ctg = p.candidates[i].cost_to_go;
    CandidateSolve cand;
    if (solver.exact_safe(free_u[i])) {
      cand = {free_u[i], bound[i]};
    } else {
      nearest = std::min(nearest, solver.worst_excess(free_u[i]));
      std::vector<Faces> starts{solver.faces(free_u[i])};
      starts.insert(starts.end(), seeds[i].begin(), seeds[i].end());
      for (const auto& corner : kCorners) starts.push_back(solver.faces(free_u[i], corner));
      for (const auto& f : starts) {
        auto r = solver.refine(problems[i], f, ctg);
        if (r.objective < cand.objective) cand = std::move(r);
      }
    }
    if (cand.objective < best.objective) {
      best = std::move(cand);
      best_index = i;
    }
  }
  if (best_index == nc) {
    throw InfeasibleError(fmt::format(
        "no feasible terminal candidate among {} ({} reachable); smallest risk excess of a "
        "risk-free plan {:.3g}",
        nc, std::count_if(bound.begin(), bound.end(), [](double b) { return std::isfinite(b); }), nearest));
  }

  FhpSolution out;
  out.inputs = split_inputs(best.u, solver.input_dim());
  out.states = rollout(p.scenario.dynamics, p.x, out.inputs);
  out.objective = best.objective;
  out.terminal = p.candidates[best_index];
  out.candidates_solved = solved;
  return out;
}

bool ClosedLoopTrajectory::collided() const {
  return std::any_of(collisions.begin(), collisions.end(), [](bool c) { return c; });
}

namespace {

// Minimum-norm inputs steering x exactly to the target in the fewest steps
// the pair (A, B) allows.
std::vector<VectorXd> landing_inputs(const ocp::LinearDynamics& dyn, const VectorXd& x, const VectorXd& target) {
  const Index n = dyn.state_dim();
  const Index m = dyn.input_dim();
  MatrixXd ctrb(n, 0);
  MatrixXd power = MatrixXd::Identity(n, n);
  for (Index k = 1; k <= n; ++k) {
    // Columns for step i hold A^{k-1-i} B.
    MatrixXd next(n, k * m);
    next.leftCols((k - 1) * m) = dyn.a * ctrb;
    next.rightCols(m) = dyn.b;
    ctrb = std::move(next);
    power = dyn.a * power;
    if (Eigen::FullPivLU<MatrixXd>(ctrb).rank() == n) {
      const VectorXd u = ctrb.completeOrthogonalDecomposition().solve(target - power * x);
      return split_inputs(u, m);
    }
  }
  throw NumericalError("dynamics are not controllable; cannot land on the target");
}

}  // namespace

ClosedLoopTrajectory dr_mpc(const ocp::Scenario& scenario, const safeset::SampledSafeSet& safe_set,
                            const risk::AmbiguitySet& amb, dist::Rng& rng, const MpcOptions& options,
                            const std::vector<WarmStart>& initial_warm_starts) {
  if (safe_set.empty()) throw ParameterError("safe set is empty");
  const auto truth = scenario.true_distribution();
  const auto& obs = scenario.obstacle;

  FiniteHorizonProblem p{scenario.start, options.horizon, scenario, safe_set.terminal_candidates(), amb,
                         initial_warm_starts, options.max_candidates};
  ClosedLoopTrajectory out;
  out.traj.states.push_back(scenario.start);

  auto advance = [&](const VectorXd& u) {
    const VectorXd& x = out.traj.states.back();
    out.traj.inputs.push_back(u);
    out.traj.stage_costs.push_back(ocp::stage_cost(scenario.cost, x, u));
    out.traj.states.push_back(ocp::step(scenario.dynamics, x, u));
    out.samples.push_back(dist::sample(truth, rng, 1).front());
  };

  std::optional<FhpSolution> prev;
  while ((out.traj.states.back() - scenario.target).norm() > options.eps_term) {
    if (out.mpc_steps >= options.t_max) {
      std::string tail;
      for (std::size_t i = out.j_values.size() > 5 ? out.j_values.size() - 5 : 0; i < out.j_values.size(); ++i) {
        tail += fmt::format(" {:.6g}", out.j_values[i]);
      }
      throw ConvergenceError(fmt::format("no convergence within {} steps; last objectives:{}", options.t_max, tail));
    }
    p.x = out.traj.states.back();
    if (prev) {
      std::vector<VectorXd> inputs(prev->inputs.begin() + 1, prev->inputs.end());
      const auto& entry = safe_set.entries()[prev->terminal.entry];
      const auto* succ = safe_set.successor(entry);
      inputs.push_back(succ ? entry.input : VectorXd::Zero(scenario.dynamics.input_dim()));
      VectorXd terminal = succ ? succ->state : entry.state;
      ++out.shift_checks;
      if (!sequence_feasible(p, inputs, terminal, 1e-6)) {
        ++out.shift_failures;
        spdlog::warn("shifted plan infeasible at step {}", out.mpc_steps);
      }
      p.warm_starts = {WarmStart{std::move(inputs), std::move(terminal)}};
    }
    auto sol = solve_fhp(p);
    out.j_values.push_back(sol.objective);
    advance(sol.inputs.front());
    ++out.mpc_steps;
    out.plans.push_back(sol);
    prev = std::move(sol);
  }

  if (out.traj.states.back() != scenario.target) {
    for (const auto& u : landing_inputs(scenario.dynamics, out.traj.states.back(), scenario.target)) {
      if (!scenario.input_box.contains(u, kBoxTol)) {
        throw NumericalError("landing input leaves the input box; reduce eps_term");
      }
      advance(u);
    }
    const double miss = (out.traj.states.back() - scenario.target).norm();
    if (miss > 1e-9) throw NumericalError(fmt::format("landing missed the target by {:.3g}", miss));
    out.traj.states.back() = scenario.target;
  }

  for (std::size_t t = 0; t < out.samples.size(); ++t) {
    const double w = (*scenario.support)[static_cast<std::size_t>(out.samples[t])];
    out.collisions.push_back(ocp::g_eval(obs, out.traj.states[t + 1], w) > 0.0);
  }
  return out;
}

bool lyapunov_check(const std::vector<double>& j_values, const std::vector<double>& stage_costs, double tol) {
  if (j_values.size() > stage_costs.size() + 1) {
    throw DimensionError("more objective values than stage costs");
  }
  for (std::size_t t = 0; t + 1 < j_values.size(); ++t) {
    if (j_values[t + 1] > j_values[t] - stage_costs[t] + tol) return false;
  }
  return true;
}

}  // namespace drilmpc::mpc
