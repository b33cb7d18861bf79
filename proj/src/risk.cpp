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

#include "drilmpc/risk.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/format.h>

#include "drilmpc/errors.hpp"
#include "drilmpc/linprog.hpp"

namespace drilmpc::risk {

namespace {

void check_level(double beta) {
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw ParameterError(fmt::format("CVaR level beta={} outside (0, 1]", beta));
  }
}

void check_aligned(std::span<const double> values, const dist::DiscreteDistribution& dist) {
  if (values.size() != dist.size()) {
    throw DimensionError(
        fmt::format("{} outcomes for a distribution over {} atoms", values.size(), dist.size()));
  }
}

linprog::LpSolution solve_or_throw(const linprog::LpProblem& lp, const char* what) {
  auto sol = linprog::lp_solve(lp);
  if (!sol.optimal()) {
    throw NumericalError(fmt::format("{} LP returned status '{}' after {} pivots", what,
                                     linprog::to_string(sol.status), sol.pivots));
  }
  return sol;
}

}  // namespace

AmbiguitySet::AmbiguitySet(dist::DiscreteDistribution center_, double radius_, double confidence_)
    : center(std::move(center_)), radius(radius_), confidence(confidence_) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw ParameterError(fmt::format("ambiguity radius {} must be finite and nonnegative", radius));
  }
}

void RiskSpec::validate() const {
  check_level(beta);
  if (!(delta > 0.0)) throw ParameterError(fmt::format("risk tolerance delta={} must be > 0", delta));
}

double cvar(std::span<const double> values, const dist::DiscreteDistribution& dist, double beta) {
  check_level(beta);
  check_aligned(values, dist);
  if (beta == 1.0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) mean += dist[i] * values[i];
    return mean;
  }
  // The objective is convex and piecewise linear with kinks at the outcomes.
  double best = std::numeric_limits<double>::infinity();
  for (double t : values) {
    double excess = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
      excess += dist[i] * std::max(values[i] - t, 0.0);
    }
    best = std::min(best, t + excess / beta);
  }
  return best;
}

double var(std::span<const double> values, const dist::DiscreteDistribution& dist, double beta) {
  check_level(beta);
  check_aligned(values, dist);
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double level = 1.0 - beta;
  double cumulative = 0.0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    cumulative += dist[order[k]];
    const bool last_of_value =
        k + 1 == order.size() || values[order[k + 1]] != values[order[k]];
    if (last_of_value && cumulative >= level - 1e-12) return values[order[k]];
  }
  return values[order.back()];
}

WorstCaseCvar worst_case_cvar_dual_detail(std::span<const double> values,
                                          const AmbiguitySet& amb, double beta) {
  check_level(beta);
  check_aligned(values, amb.center);
  const auto L = static_cast<Eigen::Index>(values.size());
  // Columns: lambda, eta, nu, gamma1[L], gamma2[L], s[L].
  const Eigen::Index lam = 0, eta = 1, nu = 2, g1 = 3, g2 = 3 + L, s = 3 + 2 * L;
  linprog::LpProblem lp(3 + 3 * L);
  lp.lower(eta) = -linprog::kInf;
  lp.lower(nu) = -linprog::kInf;
  lp.cost(lam) = 2.0 * amb.radius;
  lp.cost(eta) = 1.0;
  lp.cost(nu) = 1.0;
  for (Eigen::Index l = 0; l < L; ++l) {
    const double p = amb.center[static_cast<std::size_t>(l)];
    lp.cost(g1 + l) = p;
    lp.cost(g2 + l) = -p;
  }
  lp.a_ineq = Eigen::MatrixXd::Zero(3 * L, lp.num_vars());
  lp.b_ineq = Eigen::VectorXd::Zero(3 * L);
  for (Eigen::Index l = 0; l < L; ++l) {
    // beta (gamma1 - gamma2 + nu) >= s
    lp.a_ineq(l, s + l) = 1.0;
    lp.a_ineq(l, g1 + l) = -beta;
    lp.a_ineq(l, g2 + l) = beta;
    lp.a_ineq(l, nu) = -beta;
    // gamma1 + gamma2 <= lambda
    lp.a_ineq(L + l, g1 + l) = 1.0;
    lp.a_ineq(L + l, g2 + l) = 1.0;
    lp.a_ineq(L + l, lam) = -1.0;
    // s >= value - eta
    lp.a_ineq(2 * L + l, eta) = -1.0;
    lp.a_ineq(2 * L + l, s + l) = -1.0;
    lp.b_ineq(2 * L + l) = -values[static_cast<std::size_t>(l)];
  }
  const auto sol = solve_or_throw(lp, "worst-case CVaR dual");
  WorstCaseCvar out;
  out.value = sol.objective;
  out.tail_weights.resize(values.size());
  for (Eigen::Index l = 0; l < L; ++l) {
    out.tail_weights[static_cast<std::size_t>(l)] = std::max(0.0, sol.ineq_duals(2 * L + l));
  }
  return out;
}

double worst_case_cvar_dual(std::span<const double> values, const AmbiguitySet& amb,
                            double beta) {
  return worst_case_cvar_dual_detail(values, amb, beta).value;
}

double worst_case_cvar_primal(std::span<const double> values, const AmbiguitySet& amb,
                              double beta) {
  check_level(beta);
  check_aligned(values, amb.center);
  const auto L = static_cast<Eigen::Index>(values.size());
  // Columns: q[L], mu[L], up[L], down[L] with mu - center = up - down.
  const Eigen::Index q = 0, mu = L, up = 2 * L, down = 3 * L;
  linprog::LpProblem lp(4 * L);
  for (Eigen::Index l = 0; l < L; ++l) lp.cost(q + l) = -values[static_cast<std::size_t>(l)];

  lp.a_ineq = Eigen::MatrixXd::Zero(L + 1, lp.num_vars());
  lp.b_ineq = Eigen::VectorXd::Zero(L + 1);
  for (Eigen::Index l = 0; l < L; ++l) {
    lp.a_ineq(l, q + l) = 1.0;
    lp.a_ineq(l, mu + l) = -1.0 / beta;
    lp.a_ineq(L, up + l) = 1.0;
    lp.a_ineq(L, down + l) = 1.0;
  }
  lp.b_ineq(L) = 2.0 * amb.radius;

  lp.a_eq = Eigen::MatrixXd::Zero(L + 2, lp.num_vars());
  lp.b_eq = Eigen::VectorXd::Zero(L + 2);
  for (Eigen::Index l = 0; l < L; ++l) {
    lp.a_eq(0, q + l) = 1.0;
    lp.a_eq(1, mu + l) = 1.0;
    lp.a_eq(2 + l, mu + l) = 1.0;
    lp.a_eq(2 + l, up + l) = -1.0;
    lp.a_eq(2 + l, down + l) = 1.0;
    lp.b_eq(2 + l) = amb.center[static_cast<std::size_t>(l)];
  }
  lp.b_eq(0) = 1.0;
  lp.b_eq(1) = 1.0;
  return -solve_or_throw(lp, "worst-case CVaR primal").objective;
}

bool dr_risk_satisfied(std::span<const double> values, const AmbiguitySet& amb,
                       const RiskSpec& spec) {
  check_aligned(values, amb.center);
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  // Every CVaR lies between the smallest and largest outcome.
  if (*hi <= spec.delta + kFeasibilityTolerance) return true;
  if (*lo > spec.delta + kFeasibilityTolerance) return false;
  return worst_case_cvar_dual(values, amb, spec.beta) <= spec.delta + kFeasibilityTolerance;
}

}  // namespace drilmpc::risk
