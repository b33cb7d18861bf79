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

#include "drilmpc/linprog.hpp"

#include <cmath>
#include <vector>

#include <fmt/format.h>

#include "drilmpc/errors.hpp"

namespace drilmpc::linprog {

LpProblem::LpProblem(Eigen::Index num_vars)
    : cost(Eigen::VectorXd::Zero(num_vars)),
      a_ineq(0, num_vars),
      b_ineq(0),
      a_eq(0, num_vars),
      b_eq(0),
      lower(Eigen::VectorXd::Zero(num_vars)),
      upper(Eigen::VectorXd::Constant(num_vars, kInf)) {}

void LpProblem::add_inequality(const Eigen::RowVectorXd& coeffs, double rhs) {
  if (coeffs.size() != num_vars()) {
    throw DimensionError("inequality row has wrong length");
  }
  a_ineq.conservativeResize(a_ineq.rows() + 1, num_vars());
  a_ineq.row(a_ineq.rows() - 1) = coeffs;
  b_ineq.conservativeResize(b_ineq.size() + 1);
  b_ineq(b_ineq.size() - 1) = rhs;
}

void LpProblem::add_equality(const Eigen::RowVectorXd& coeffs, double rhs) {
  if (coeffs.size() != num_vars()) {
    throw DimensionError("equality row has wrong length");
  }
  a_eq.conservativeResize(a_eq.rows() + 1, num_vars());
  a_eq.row(a_eq.rows() - 1) = coeffs;
  b_eq.conservativeResize(b_eq.size() + 1);
  b_eq(b_eq.size() - 1) = rhs;
}

void LpProblem::validate() const {
  const auto n = num_vars();
  if (a_ineq.cols() != n || a_eq.cols() != n || lower.size() != n || upper.size() != n) {
    throw DimensionError(fmt::format("LP with {} variables has mismatched column blocks", n));
  }
  if (a_ineq.rows() != b_ineq.size() || a_eq.rows() != b_eq.size()) {
    throw DimensionError("LP right-hand sides do not match row counts");
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    if (std::isnan(lower(j)) || std::isnan(upper(j)) || lower(j) > upper(j)) {
      throw ParameterError(fmt::format("LP variable {} has invalid bounds [{}, {}]", j,
                                       lower(j), upper(j)));
    }
  }
}

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::kOptimal:
      return "optimal";
    case LpStatus::kInfeasible:
      return "infeasible";
    case LpStatus::kUnbounded:
      return "unbounded";
  }
  return "unknown";
}

double LpSolution::dual_objective(const LpProblem& problem) const {
  double value = -problem.b_ineq.dot(ineq_duals) - problem.b_eq.dot(eq_duals);
  for (Eigen::Index j = 0; j < reduced_costs.size(); ++j) {
    const double r = reduced_costs(j);
    if (std::abs(r) <= 1e-12) continue;
    const double bound = r > 0 ? problem.lower(j) : problem.upper(j);
    if (!std::isfinite(bound)) return r > 0 ? -kInf : kInf;
    value += r * bound;
  }
  return value;
}

namespace {

enum class RowKind { kLessEqual, kGreaterEqual, kEqual };
enum class RowOrigin { kInequality, kEquality, kBound };

// Original variable j = offset + sign * z[plus] - z[minus] (minus < 0 when unused).
struct ColumnMap {
  double offset = 0.0;
  double sign = 1.0;
  int plus = -1;
  int minus = -1;
};

struct Row {
  RowOrigin origin;
  Eigen::Index source;
  RowKind kind;
  double scale = 1.0;
};

class Tableau {
 public:
  Tableau(Eigen::MatrixXd body, std::vector<int> basis, const LpOptions& options)
      : t_(std::move(body)), basis_(std::move(basis)), options_(options) {}

  [[nodiscard]] Eigen::Index rows() const { return t_.rows(); }
  [[nodiscard]] Eigen::Index cols() const { return t_.cols() - 1; }
  [[nodiscard]] double rhs(Eigen::Index i) const { return t_(i, t_.cols() - 1); }
  [[nodiscard]] double at(Eigen::Index i, Eigen::Index j) const { return t_(i, j); }
  [[nodiscard]] int basic(Eigen::Index i) const { return basis_[static_cast<size_t>(i)]; }
  [[nodiscard]] const Eigen::VectorXd& reduced() const { return reduced_; }
  [[nodiscard]] int pivots() const { return pivots_; }

  void price(const Eigen::VectorXd& cost) {
    reduced_ = cost;
    for (Eigen::Index i = 0; i < rows(); ++i) {
      const double cb = cost(basic(i));
      if (cb != 0.0) reduced_ -= cb * t_.row(i).head(cols()).transpose();
    }
  }

  void pivot(Eigen::Index r, Eigen::Index e) {
    if (++pivots_ > options_.max_pivots) {
      throw NumericalError(
          fmt::format("simplex exceeded {} pivots ({} rows, {} columns)", options_.max_pivots,
                      rows(), cols()));
    }
    t_.row(r) /= t_(r, e);
    for (Eigen::Index i = 0; i < rows(); ++i) {
      if (i == r) continue;
      const double f = t_(i, e);
      if (f != 0.0) t_.row(i) -= f * t_.row(r);
    }
    const double d = reduced_(e);
    if (d != 0.0) reduced_ -= d * t_.row(r).head(cols()).transpose();
    reduced_(e) = 0.0;
    basis_[static_cast<size_t>(r)] = static_cast<int>(e);
  }

  // Runs Bland's rule until optimality. Returns false if unbounded.
  bool optimize(const std::vector<bool>& may_enter) {
    for (;;) {
      Eigen::Index entering = -1;
      for (Eigen::Index j = 0; j < cols(); ++j) {
        if (may_enter[static_cast<size_t>(j)] && reduced_(j) < -options_.optimality_tolerance) {
          entering = j;
          break;
        }
      }
      if (entering < 0) return true;

      Eigen::Index leaving = -1;
      double best_ratio = kInf;
      for (Eigen::Index i = 0; i < rows(); ++i) {
        const double a = t_(i, entering);
        if (a <= options_.pivot_tolerance) continue;
        const double ratio = rhs(i) / a;
        if (leaving < 0) {
          leaving = i;
          best_ratio = ratio;
          continue;
        }
        const double tie = 1e-12 * (1.0 + std::abs(best_ratio));
        if (ratio < best_ratio - tie) {
          leaving = i;
          best_ratio = ratio;
        } else if (ratio <= best_ratio + tie && basic(i) < basic(leaving)) {
          leaving = i;
        }
      }
      if (leaving < 0) return false;
      pivot(leaving, entering);
    }
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<int> basis_;
  Eigen::VectorXd reduced_;
  LpOptions options_;
  int pivots_ = 0;
};

}  // namespace

LpSolution lp_solve(const LpProblem& problem, const LpOptions& options) {
  problem.validate();
  const Eigen::Index n = problem.num_vars();

  // Shift and split variables so every standard-form column is nonnegative.
  std::vector<ColumnMap> map(static_cast<size_t>(n));
  std::vector<std::pair<int, double>> upper_rows;
  int num_std = 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& m = map[static_cast<size_t>(j)];
    const double lo = problem.lower(j);
    const double hi = problem.upper(j);
    if (std::isfinite(lo)) {
      m.offset = lo;
      m.plus = num_std++;
      if (std::isfinite(hi)) upper_rows.emplace_back(m.plus, hi - lo);
    } else if (std::isfinite(hi)) {
      m.offset = hi;
      m.sign = -1.0;
      m.plus = num_std++;
    } else {
      m.plus = num_std++;
      m.minus = num_std++;
    }
  }

  const Eigen::Index num_rows =
      problem.a_ineq.rows() + problem.a_eq.rows() + static_cast<Eigen::Index>(upper_rows.size());
  Eigen::MatrixXd coeffs = Eigen::MatrixXd::Zero(num_rows, num_std);
  Eigen::VectorXd rhs(num_rows);
  std::vector<Row> rows;
  rows.reserve(static_cast<size_t>(num_rows));

  auto load_row = [&](const Eigen::RowVectorXd& a, double b) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    double shifted = b;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double aj = a(j);
      if (aj == 0.0) continue;
      const auto& m = map[static_cast<size_t>(j)];
      shifted -= aj * m.offset;
      coeffs(r, m.plus) += aj * m.sign;
      if (m.minus >= 0) coeffs(r, m.minus) -= aj;
    }
    rhs(r) = shifted;
  };
  for (Eigen::Index i = 0; i < problem.a_ineq.rows(); ++i) {
    load_row(problem.a_ineq.row(i), problem.b_ineq(i));
    rows.push_back({RowOrigin::kInequality, i, RowKind::kLessEqual});
  }
  for (Eigen::Index i = 0; i < problem.a_eq.rows(); ++i) {
    load_row(problem.a_eq.row(i), problem.b_eq(i));
    rows.push_back({RowOrigin::kEquality, i, RowKind::kEqual});
  }
  for (const auto& [col, width] : upper_rows) {
    const auto r = static_cast<Eigen::Index>(rows.size());
    coeffs(r, col) = 1.0;
    rhs(r) = width;
    rows.push_back({RowOrigin::kBound, col, RowKind::kLessEqual});
  }

  int num_slack = 0;
  int num_artificial = 0;
  for (Eigen::Index r = 0; r < num_rows; ++r) {
    auto& row = rows[static_cast<size_t>(r)];
    if (rhs(r) < 0.0) {
      coeffs.row(r) *= -1.0;
      rhs(r) = -rhs(r);
      row.scale = -1.0;
      if (row.kind == RowKind::kLessEqual) row.kind = RowKind::kGreaterEqual;
    }
    if (row.kind != RowKind::kEqual) ++num_slack;
    if (row.kind != RowKind::kLessEqual) ++num_artificial;
  }

  const int first_slack = num_std;
  const int first_artificial = num_std + num_slack;
  const int num_cols = first_artificial + num_artificial;
  Eigen::MatrixXd body = Eigen::MatrixXd::Zero(num_rows, num_cols + 1);
  body.leftCols(num_std) = coeffs;
  body.col(num_cols) = rhs;
  std::vector<int> basis(static_cast<size_t>(num_rows));
  std::vector<int> identity_col(static_cast<size_t>(num_rows));
  {
    int s = first_slack;
    int a = first_artificial;
    for (Eigen::Index r = 0; r < num_rows; ++r) {
      const auto kind = rows[static_cast<size_t>(r)].kind;
      if (kind == RowKind::kLessEqual) {
        body(r, s) = 1.0;
        identity_col[static_cast<size_t>(r)] = s++;
      } else {
        if (kind == RowKind::kGreaterEqual) body(r, s++) = -1.0;
        body(r, a) = 1.0;
        identity_col[static_cast<size_t>(r)] = a++;
      }
      basis[static_cast<size_t>(r)] = identity_col[static_cast<size_t>(r)];
    }
  }

  Tableau tableau(std::move(body), std::move(basis), options);
  LpSolution solution;

  if (num_artificial > 0) {
    Eigen::VectorXd phase1 = Eigen::VectorXd::Zero(num_cols);
    phase1.tail(num_artificial).setOnes();
    tableau.price(phase1);
    tableau.optimize(std::vector<bool>(static_cast<size_t>(num_cols), true));
    double infeasibility = 0.0;
    for (Eigen::Index i = 0; i < tableau.rows(); ++i) {
      if (tableau.basic(i) >= first_artificial) infeasibility += tableau.rhs(i);
    }
    const double scale = 1.0 + (rhs.size() > 0 ? rhs.lpNorm<Eigen::Infinity>() : 0.0);
    if (infeasibility > options.feasibility_tolerance * scale) {
      solution.status = LpStatus::kInfeasible;
      solution.pivots = tableau.pivots();
      return solution;
    }
    // Pivot zero-level artificials out of the basis where a structural or
    // slack column allows it; rows where none does are redundant.
    for (Eigen::Index i = 0; i < tableau.rows(); ++i) {
      if (tableau.basic(i) < first_artificial) continue;
      for (int j = 0; j < first_artificial; ++j) {
        if (std::abs(tableau.at(i, j)) > options.pivot_tolerance) {
          tableau.pivot(i, j);
          break;
        }
      }
    }
  }

  Eigen::VectorXd phase2 = Eigen::VectorXd::Zero(num_cols);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& m = map[static_cast<size_t>(j)];
    const double c = problem.cost(j);
    phase2(m.plus) += c * m.sign;
    if (m.minus >= 0) phase2(m.minus) -= c;
  }
  tableau.price(phase2);
  std::vector<bool> may_enter(static_cast<size_t>(num_cols), true);
  for (int j = first_artificial; j < num_cols; ++j) may_enter[static_cast<size_t>(j)] = false;
  const bool bounded = tableau.optimize(may_enter);
  solution.pivots = tableau.pivots();
  if (!bounded) {
    solution.status = LpStatus::kUnbounded;
    solution.objective = -kInf;
    return solution;
  }

  Eigen::VectorXd z = Eigen::VectorXd::Zero(num_cols);
  for (Eigen::Index i = 0; i < tableau.rows(); ++i) z(tableau.basic(i)) = tableau.rhs(i);
  solution.x.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& m = map[static_cast<size_t>(j)];
    double v = m.offset + m.sign * z(m.plus);
    if (m.minus >= 0) v -= z(m.minus);
    solution.x(j) = v;
  }
  solution.status = LpStatus::kOptimal;
  solution.objective = problem.cost.dot(solution.x);

  solution.ineq_duals = Eigen::VectorXd::Zero(problem.a_ineq.rows());
  solution.eq_duals = Eigen::VectorXd::Zero(problem.a_eq.rows());
  for (Eigen::Index r = 0; r < num_rows; ++r) {
    const auto& row = rows[static_cast<size_t>(r)];
    // Simplex multiplier of the (scaled) row is minus the reduced cost of its identity column.
    const double pi = -tableau.reduced()(identity_col[static_cast<size_t>(r)]);
    const double multiplier = -row.scale * pi;
    if (row.origin == RowOrigin::kInequality) {
      solution.ineq_duals(row.source) = multiplier;
    } else if (row.origin == RowOrigin::kEquality) {
      solution.eq_duals(row.source) = multiplier;
    }
  }
  solution.reduced_costs = problem.cost + problem.a_ineq.transpose() * solution.ineq_duals +
                           problem.a_eq.transpose() * solution.eq_duals;
  return solution;
}

}  // namespace drilmpc::linprog
