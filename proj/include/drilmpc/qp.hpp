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

namespace drilmpc::qp {

/// Strictly convex quadratic program
///
///   minimize    0.5 x' H x + g' x
///   subject to  a_eq x = b_eq,  a_ineq x <= b_ineq.
struct QpProblem {
  Eigen::MatrixXd hessian;
  Eigen::VectorXd linear;
  Eigen::MatrixXd a_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_ineq;
  Eigen::VectorXd b_ineq;

  QpProblem() = default;
  explicit QpProblem(Eigen::Index num_vars);

  [[nodiscard]] Eigen::Index num_vars() const { return linear.size(); }
  void add_inequality(const Eigen::RowVectorXd& coeffs, double rhs);
  void add_equality(const Eigen::RowVectorXd& coeffs, double rhs);
  [[nodiscard]] double objective(const Eigen::VectorXd& x) const;
};

enum class QpStatus { kOptimal, kInfeasible };

struct QpSolution {
  QpStatus status = QpStatus::kInfeasible;
  Eigen::VectorXd x;
  double objective = 0.0;
  /// Nonnegative multipliers of the inequality rows.
  Eigen::VectorXd ineq_duals;
  Eigen::VectorXd eq_duals;
  int iterations = 0;

  [[nodiscard]] bool optimal() const { return status == QpStatus::kOptimal; }
};

struct QpOptions {
  double feasibility_tolerance = 1e-10;
  int max_iterations = 2000;
};

/// Goldfarb-Idnani dual active-set method. Starts from the unconstrained
/// minimizer and adds the most violated constraint each round, so a report
/// of infeasibility is a certificate rather than a stall. Throws
/// ParameterError if H is not positive definite and NumericalError past the
/// iteration cap.
QpSolution qp_solve(const QpProblem& problem, const QpOptions& options = {});

}  // namespace drilmpc::qp
