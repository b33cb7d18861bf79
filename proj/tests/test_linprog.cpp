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

#include <doctest.h>

#include <random>

#include "drilmpc/errors.hpp"
#include "drilmpc/linprog.hpp"
#include "oracles.hpp"

using namespace drilmpc;
using linprog::kInf;
using linprog::LpProblem;
using linprog::LpStatus;

namespace {

// Random LP with box bounds so that the feasible set is bounded.
LpProblem random_lp(std::mt19937_64& gen, int n, int m_ineq, int m_eq) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  LpProblem lp(n);
  for (int j = 0; j < n; ++j) {
    lp.cost(j) = u(gen);
    lp.lower(j) = -2.0 - std::abs(u(gen));
    lp.upper(j) = 2.0 + std::abs(u(gen));
  }
  Eigen::VectorXd interior(n);
  for (int j = 0; j < n; ++j) interior(j) = 0.5 * u(gen);
  for (int i = 0; i < m_ineq; ++i) {
    Eigen::RowVectorXd row(n);
    for (int j = 0; j < n; ++j) row(j) = u(gen);
    // About a quarter of the rows are placed to exclude the interior point.
    const double slack = u(gen) + 0.5;
    lp.add_inequality(row, row.dot(interior) + slack);
  }
  for (int i = 0; i < m_eq; ++i) {
    Eigen::RowVectorXd row(n);
    for (int j = 0; j < n; ++j) row(j) = u(gen);
    lp.add_equality(row, row.dot(interior));
  }
  return lp;
}

testing::VertexResult oracle(const LpProblem& lp) {
  const auto n = lp.num_vars();
  const auto m = lp.a_ineq.rows();
  Eigen::MatrixXd G(m + 2 * n, n);
  Eigen::VectorXd h(m + 2 * n);
  G.topRows(m) = lp.a_ineq;
  h.head(m) = lp.b_ineq;
  G.middleRows(m, n) = Eigen::MatrixXd::Identity(n, n);
  h.segment(m, n) = lp.upper;
  G.bottomRows(n) = -Eigen::MatrixXd::Identity(n, n);
  h.tail(n) = -lp.lower;
  return testing::vertex_enumeration(lp.cost, G, h, lp.a_eq, lp.b_eq);
}

}  // namespace

TEST_CASE("lp: single lower bound") {
  LpProblem lp(1);
  lp.lower(0) = -kInf;
  lp.cost(0) = 1.0;
  lp.add_inequality(Eigen::RowVectorXd::Constant(1, -1.0), -3.0);
  const auto sol = linprog::lp_solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.x(0) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(sol.ineq_duals(0) == doctest::Approx(1.0));
}

TEST_CASE("lp: vertex of the simplex") {
  LpProblem lp(3);
  lp.cost << 1.0, 2.0, 0.0;
  lp.add_equality(Eigen::RowVectorXd::Ones(3), 1.0);
  const auto sol = linprog::lp_solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(0.0));
  CHECK(sol.x(2) == doctest::Approx(1.0));
}

TEST_CASE("lp: infeasible and unbounded are certified") {
  LpProblem infeasible(1);
  infeasible.add_inequality(Eigen::RowVectorXd::Ones(1), -1.0);
  CHECK(linprog::lp_solve(infeasible).status == LpStatus::kInfeasible);

  LpProblem unbounded(2);
  unbounded.cost << -1.0, 0.0;
  unbounded.add_inequality((Eigen::RowVectorXd(2) << 0.0, 1.0).finished(), 1.0);
  CHECK(linprog::lp_solve(unbounded).status == LpStatus::kUnbounded);
}

TEST_CASE("lp: upper-bounded and free variables") {
  LpProblem lp(2);
  lp.lower << -kInf, -kInf;
  lp.upper << 4.0, kInf;
  lp.cost << -1.0, 1.0;
  lp.add_inequality((Eigen::RowVectorXd(2) << 1.0, -1.0).finished(), 1.0);
  lp.add_inequality((Eigen::RowVectorXd(2) << 0.0, -1.0).finished(), 10.0);
  const auto sol = linprog::lp_solve(lp);
  REQUIRE(sol.optimal());
  // z0 - z1 <= 1 binds: cost -z0 + z1 >= -1.
  CHECK(sol.objective == doctest::Approx(-1.0));
  CHECK(sol.dual_objective(lp) == doctest::Approx(-1.0));
}

TEST_CASE("lp: malformed problems throw") {
  LpProblem lp(2);
  lp.lower(0) = 1.0;
  lp.upper(0) = 0.0;
  CHECK_THROWS_AS(linprog::lp_solve(lp), ParameterError);
  LpProblem bad(2);
  bad.b_ineq.resize(1);
  CHECK_THROWS_AS(linprog::lp_solve(bad), DimensionError);
  CHECK_THROWS_AS(bad.add_inequality(Eigen::RowVectorXd::Ones(3), 0.0), DimensionError);
}

TEST_CASE("lp: degenerate problem terminates") {
  // Classic cycling example (Beale) with all-zero right-hand sides.
  LpProblem lp(4);
  lp.cost << -0.75, 150.0, -0.02, 6.0;
  lp.add_inequality((Eigen::RowVectorXd(4) << 0.25, -60.0, -0.04, 9.0).finished(), 0.0);
  lp.add_inequality((Eigen::RowVectorXd(4) << 0.5, -90.0, -0.02, 3.0).finished(), 0.0);
  lp.add_inequality((Eigen::RowVectorXd(4) << 0.0, 0.0, 1.0, 0.0).finished(), 1.0);
  const auto sol = linprog::lp_solve(lp);
  REQUIRE(sol.optimal());
  CHECK(sol.objective == doctest::Approx(-0.05));
}

TEST_CASE("lp: randomized instances agree with vertex enumeration") {
  std::mt19937_64 gen(20260419);
  std::uniform_int_distribution<int> nd(1, 6), md(0, 8);
  int optimal = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = nd(gen);
    const int m_eq = std::uniform_int_distribution<int>(0, std::min(2, n - 1))(gen);
    const auto lp = random_lp(gen, n, md(gen), m_eq);
    const auto sol = linprog::lp_solve(lp);
    const auto ref = oracle(lp);
    CAPTURE(trial);
    if (!ref.feasible) {
      CHECK(sol.status == LpStatus::kInfeasible);
      continue;
    }
    REQUIRE(sol.optimal());
    ++optimal;
    CHECK(std::abs(sol.objective - ref.objective) <= 1e-8);
    CHECK(std::abs(sol.objective - sol.dual_objective(lp)) <= 1e-7);
    if (lp.a_ineq.rows() > 0) {
      CHECK(((lp.a_ineq * sol.x - lp.b_ineq).array() <= 1e-8).all());
      CHECK((sol.ineq_duals.array() >= -1e-9).all());
    }
  }
  CHECK(optimal > 200);
}

TEST_CASE("lp: identical input gives bitwise identical output") {
  std::mt19937_64 gen(3);
  const auto lp = random_lp(gen, 5, 6, 1);
  const auto a = linprog::lp_solve(lp);
  const auto b = linprog::lp_solve(lp);
  CHECK(a.status == b.status);
  CHECK(a.x == b.x);
  CHECK(a.ineq_duals == b.ineq_duals);
}
