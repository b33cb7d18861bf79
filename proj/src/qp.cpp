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

#include "drilmpc/qp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include <fmt/format.h>

#include "drilmpc/errors.hpp"

namespace drilmpc::qp {

QpProblem::QpProblem(Eigen::Index num_vars)
    : hessian(Eigen::MatrixXd::Zero(num_vars, num_vars)),
      linear(Eigen::VectorXd::Zero(num_vars)),
      a_eq(0, num_vars),
      b_eq(0),
      a_ineq(0, num_vars),
      b_ineq(0) {}

void QpProblem::add_inequality(const Eigen::RowVectorXd& coeffs, double rhs) {
  if (coeffs.size() != num_vars()) throw DimensionError("QP inequality row has wrong length");
  a_ineq.conservativeResize(a_ineq.rows() + 1, num_vars());
  a_ineq.row(a_ineq.rows() - 1) = coeffs;
  b_ineq.conservativeResize(b_ineq.size() + 1);
  b_ineq(b_ineq.size() - 1) = rhs;
}

void QpProblem::add_equality(const Eigen::RowVectorXd& coeffs, double rhs) {
  if (coeffs.size() != num_vars()) throw DimensionError("QP equality row has wrong length");
  a_eq.conservativeResize(a_eq.rows() + 1, num_vars());
  a_eq.row(a_eq.rows() - 1) = coeffs;
  b_eq.conservativeResize(b_eq.size() + 1);
  b_eq(b_eq.size() - 1) = rhs;
}

double QpProblem::objective(const Eigen::VectorXd& x) const {
  return 0.5 * x.dot(hessian * x) + linear.dot(x);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Active constraint in the form n'x >= c (equalities may carry a flipped sign).
struct Active {
  Eigen::Index row;
  bool equality;
  double sign;
};

}  // namespace

QpSolution qp_solve(const QpProblem& p, const QpOptions& options) {
  const Eigen::Index n = p.num_vars();
  if (p.hessian.rows() != n || p.hessian.cols() != n || p.a_eq.cols() != n ||
      p.a_ineq.cols() != n || p.a_eq.rows() != p.b_eq.size() ||
      p.a_ineq.rows() != p.b_ineq.size()) {
    throw DimensionError(fmt::format("QP blocks inconsistent with {} variables", n));
  }
  const Eigen::LLT<Eigen::MatrixXd> chol(p.hessian);
  if (chol.info() != Eigen::Success) throw ParameterError("QP Hessian is not positive definite");

  // Row i of the problem as n'x >= c.
  auto normal = [&](const Active& a) -> Eigen::VectorXd {
    return a.equality ? Eigen::VectorXd(a.sign * p.a_eq.row(a.row).transpose())
                      : Eigen::VectorXd(-p.a_ineq.row(a.row).transpose());
  };
  auto bound = [&](const Active& a) {
    return a.equality ? a.sign * p.b_eq(a.row) : -p.b_ineq(a.row);
  };
  auto slack = [&](const Active& a, const Eigen::VectorXd& x) {
    return normal(a).dot(x) - bound(a);
  };
  auto tolerance = [&](const Active& a) {
    return options.feasibility_tolerance * (1.0 + std::abs(bound(a)));
  };

  QpSolution sol;
  Eigen::VectorXd x = -chol.solve(p.linear);
  std::vector<Active> active;
  std::vector<double> mult;
  std::vector<bool> eq_active(static_cast<size_t>(p.a_eq.rows()), false);
  std::vector<bool> ineq_active(static_cast<size_t>(p.a_ineq.rows()), false);

  auto pick_violated = [&]() -> std::optional<Active> {
    for (Eigen::Index i = 0; i < p.a_eq.rows(); ++i) {
      if (eq_active[static_cast<size_t>(i)]) continue;
      Active a{i, true, 1.0};
      const double s = slack(a, x);
      if (std::abs(s) > tolerance(a)) {
        if (s > 0) a.sign = -1.0;
        return a;
      }
    }
    std::optional<Active> worst;
    double worst_scaled = 0.0;
    for (Eigen::Index i = 0; i < p.a_ineq.rows(); ++i) {
      if (ineq_active[static_cast<size_t>(i)]) continue;
      Active a{i, false, 1.0};
      const double s = slack(a, x);
      if (s < -tolerance(a)) {
        const double scaled = s / (1.0 + p.a_ineq.row(i).norm());
        if (!worst || scaled < worst_scaled) {
          worst = a;
          worst_scaled = scaled;
        }
      }
    }
    return worst;
  };

  int iterations = 0;
  auto bump = [&] {
    if (++iterations > options.max_iterations) {
      throw NumericalError(fmt::format("QP active-set method exceeded {} iterations",
                                       options.max_iterations));
    }
  };

  for (;;) {
    bump();
    auto candidate = pick_violated();
    if (!candidate) break;
    const Active add = *candidate;
    const Eigen::VectorXd np = normal(add);
    double u_add = 0.0;

    for (;;) {
      bump();
      const auto m = static_cast<Eigen::Index>(active.size());
      Eigen::MatrixXd N(n, m);
      for (Eigen::Index k = 0; k < m; ++k) N.col(k) = normal(active[static_cast<size_t>(k)]);
      // Direction: H z + N r = n_p, N'z = 0.
      const Eigen::VectorXd hinv_np = chol.solve(np);
      Eigen::VectorXd r = Eigen::VectorXd::Zero(m);
      Eigen::VectorXd z = hinv_np;
      if (m > 0) {
        const Eigen::MatrixXd hinv_n = chol.solve(N);
        const Eigen::MatrixXd schur = N.transpose() * hinv_n;
        r = schur.partialPivLu().solve(N.transpose() * hinv_np);
        z = hinv_np - hinv_n * r;
      }
      const double curvature = z.dot(np);
      const bool zero_step = curvature <= 1e-12 * std::max(1.0, np.dot(hinv_np));

      double t1 = kInf;
      Eigen::Index blocking = -1;
      for (Eigen::Index k = 0; k < m; ++k) {
        const auto& a = active[static_cast<size_t>(k)];
        if (a.equality || r(k) <= 1e-14) continue;
        const double ratio = mult[static_cast<size_t>(k)] / r(k);
        if (ratio < t1) {
          t1 = ratio;
          blocking = k;
        }
      }
      const double t2 = zero_step ? kInf : -slack(add, x) / curvature;
      if (t1 == kInf && t2 == kInf) {
        sol.status = QpStatus::kInfeasible;
        sol.iterations = iterations;
        sol.x = x;
        return sol;
      }
      const double t = std::min(t1, t2);
      if (!zero_step) x += t * z;
      for (Eigen::Index k = 0; k < m; ++k) mult[static_cast<size_t>(k)] -= t * r(k);
      u_add += t;
      if (t2 <= t1) {
        active.push_back(add);
        mult.push_back(u_add);
        (add.equality ? eq_active : ineq_active)[static_cast<size_t>(add.row)] = true;
        break;
      }
      const auto drop = active[static_cast<size_t>(blocking)];
      ineq_active[static_cast<size_t>(drop.row)] = false;
      active.erase(active.begin() + blocking);
      mult.erase(mult.begin() + blocking);
    }
  }

  sol.status = QpStatus::kOptimal;
  sol.x = x;
  sol.objective = p.objective(x);
  sol.iterations = iterations;
  sol.ineq_duals = Eigen::VectorXd::Zero(p.a_ineq.rows());
  sol.eq_duals = Eigen::VectorXd::Zero(p.a_eq.rows());
  for (size_t k = 0; k < active.size(); ++k) {
    const auto& a = active[k];
    if (a.equality) {
      sol.eq_duals(a.row) = -a.sign * mult[k];
    } else {
      sol.ineq_duals(a.row) = std::max(0.0, mult[k]);
    }
  }
  return sol;
}

}  // namespace drilmpc::qp
