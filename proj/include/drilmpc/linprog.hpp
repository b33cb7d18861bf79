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

#include <limits>

namespace drilmpc::linprog {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Dense linear program
///
///   minimize    cost' z
///   subject to  a_ineq z <= b_ineq
///               a_eq   z  = b_eq
///               lower <= z <= upper
///
/// Bounds may be infinite. A default-constructed problem of dimension n has
/// the nonnegative orthant as its bound set.
struct LpProblem {
  Eigen::VectorXd cost;
  Eigen::MatrixXd a_ineq;
  Eigen::VectorXd b_ineq;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  LpProblem() = default;
  explicit LpProblem(Eigen::Index num_vars);

  [[nodiscard]] Eigen::Index num_vars() const { return cost.size(); }

  /// Appends a row `coeffs' z <= rhs`.
  void add_inequality(const Eigen::RowVectorXd& coeffs, double rhs);
  /// Appends a row `coeffs' z == rhs`.
  void add_equality(const Eigen::RowVectorXd& coeffs, double rhs);

  /// Throws DimensionError / ParameterError when blocks disagree or a bound
  /// pair is inverted.
  void validate() const;
};

enum class LpStatus { kOptimal, kInfeasible, kUnbounded };

const char* to_string(LpStatus status);

/// Result of lp_solve. Multipliers follow the Lagrangian
///   L = c'z + y'(A z - b) + w'(E z - d) - r_l'(z - l) + r_u'(z - u)
/// so `ineq_duals` (y) are nonnegative, `reduced_costs` equal c + A'y + E'w
/// (= r_l - r_u), and d objective / d b_ineq = -y.
struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  Eigen::VectorXd x;
  double objective = kInf;
  Eigen::VectorXd ineq_duals;
  Eigen::VectorXd eq_duals;
  Eigen::VectorXd reduced_costs;
  int pivots = 0;

  [[nodiscard]] bool optimal() const { return status == LpStatus::kOptimal; }

  /// Objective of the Lagrangian dual evaluated at the returned multipliers.
  [[nodiscard]] double dual_objective(const LpProblem& problem) const;
};

struct LpOptions {
  double pivot_tolerance = 1e-10;
  double optimality_tolerance = 1e-10;
  double feasibility_tolerance = 1e-9;
  int max_pivots = 100000;
};

/// Two-phase dense tableau simplex with Bland's anti-cycling rule.
/// Throws NumericalError when the pivot cap is exceeded.
LpSolution lp_solve(const LpProblem& problem, const LpOptions& options = {});

}  // namespace drilmpc::linprog
