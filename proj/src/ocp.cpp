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

#include "drilmpc/ocp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <memory>

#include <fmt/format.h>

#include "drilmpc/errors.hpp"

namespace drilmpc::ocp {

LinearDynamics::LinearDynamics(Eigen::MatrixXd a_, Eigen::MatrixXd b_)
    : a(std::move(a_)), b(std::move(b_)) {
  if (a.rows() != a.cols() || b.rows() != a.rows() || b.cols() < 1) {
    throw DimensionError(fmt::format("dynamics A is {}x{} and B is {}x{}", a.rows(), a.cols(),
                                     b.rows(), b.cols()));
  }
}

LinearDynamics LinearDynamics::double_integrator_2d() {
  Eigen::MatrixXd a(4, 4);
  a << 1, 0, 1, 0,  //
      0, 1, 0, 1,   //
      0, 0, 1, 0,   //
      0, 0, 0, 1;
  Eigen::MatrixXd b(4, 2);
  b << 0, 0,  //
      0, 0,   //
      1, 0,   //
      0, 1;
  return {a, b};
}

QuadraticStageCost::QuadraticStageCost(Eigen::MatrixXd q_, Eigen::MatrixXd r_,
                                       Eigen::VectorXd target_)
    : q(std::move(q_)), r(std::move(r_)), target(std::move(target_)) {
  if (q.rows() != q.cols() || q.rows() != target.size() || r.rows() != r.cols()) {
    throw DimensionError("stage cost weights do not match the target dimension");
  }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> qe(0.5 * (q + q.transpose()));
  if (qe.eigenvalues().minCoeff() < -1e-12) throw ParameterError("state weight Q must be PSD");
  const Eigen::LLT<Eigen::MatrixXd> rl(0.5 * (r + r.transpose()));
  if (rl.info() != Eigen::Success) throw ParameterError("input weight R must be positive definite");
}

BoxSet::BoxSet(Eigen::VectorXd lower_, Eigen::VectorXd upper_)
    : lower(std::move(lower_)), upper(std::move(upper_)) {
  if (lower.size() != upper.size()) throw DimensionError("box bounds differ in length");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!std::isfinite(lower(i)) || !std::isfinite(upper(i)) || lower(i) > upper(i)) {
      throw ParameterError(fmt::format("box coordinate {} has invalid bounds [{}, {}]", i,
                                       lower(i), upper(i)));
    }
  }
}

bool BoxSet::contains(const Eigen::VectorXd& v, double tol) const {
  if (v.size() != lower.size()) throw DimensionError("box membership query has wrong length");
  return ((v - lower).array() >= -tol).all() && ((upper - v).array() >= -tol).all();
}

void ObstacleModel::validate() const {
  if (std::abs(direction.norm() - 1.0) > 1e-12) {
    throw ParameterError("obstacle drift direction must have unit norm");
  }
  if (!(half_length > 0.0)) throw ParameterError("obstacle half length must be positive");
}

Eigen::Vector2d ObstacleModel::position(const Eigen::VectorXd& x) const {
  return {x(position_coords[0]), x(position_coords[1])};
}

const std::array<Eigen::Vector2d, kNumFaces>& face_normals() {
  static const std::array<Eigen::Vector2d, kNumFaces> normals{
      Eigen::Vector2d{1.0, 0.0}, Eigen::Vector2d{-1.0, 0.0}, Eigen::Vector2d{0.0, 1.0},
      Eigen::Vector2d{0.0, -1.0}};
  return normals;
}

std::array<double, kNumFaces> face_depths(const ObstacleModel& obs, const Eigen::Vector2d& p,
                                          double w) {
  const Eigen::Vector2d rel = p - obs.center(w);
  std::array<double, kNumFaces> depth{};
  for (int j = 0; j < kNumFaces; ++j) {
    depth[static_cast<size_t>(j)] = obs.half_length - face_normals()[static_cast<size_t>(j)].dot(rel);
  }
  return depth;
}

int active_face(const ObstacleModel& obs, const Eigen::Vector2d& p, double w) {
  const auto depth = face_depths(obs, p, w);
  return static_cast<int>(std::min_element(depth.begin(), depth.end()) - depth.begin());
}

double g_eval(const ObstacleModel& obs, const Eigen::VectorXd& x, double w) {
  const auto depth = face_depths(obs, obs.position(x), w);
  return std::max(0.0, *std::min_element(depth.begin(), depth.end()));
}

std::vector<double> risk_values(const ObstacleModel& obs, const Eigen::VectorXd& x,
                                const dist::SupportGrid& support) {
  std::vector<double> out(support.size());
  for (std::size_t l = 0; l < support.size(); ++l) out[l] = g_eval(obs, x, support[l]);
  return out;
}

Eigen::VectorXd step(const LinearDynamics& dyn, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (x.size() != dyn.state_dim() || u.size() != dyn.input_dim()) {
    throw DimensionError(fmt::format("step with state of size {} and input of size {}", x.size(),
                                     u.size()));
  }
  return dyn.a * x + dyn.b * u;
}

double stage_cost(const QuadraticStageCost& cost, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  if (x.size() != cost.target.size() || u.size() != cost.r.rows()) {
    throw DimensionError("stage cost evaluated with wrongly sized state or input");
  }
  const Eigen::VectorXd e = cost.target - x;
  return e.dot(cost.q * e) + u.dot(cost.r * u);
}

void Scenario::validate() const {
  const auto nx = dynamics.state_dim();
  const auto nu = dynamics.input_dim();
  if (cost.target.size() != nx || cost.r.rows() != nu || state_box.lower.size() != nx ||
      input_box.lower.size() != nu || start.size() != nx || target.size() != nx) {
    throw DimensionError("scenario blocks disagree on state/input dimensions");
  }
  if (!(cost.target - target).isZero(0.0)) {
    throw ParameterError("stage cost target differs from the scenario target");
  }
  if (!(dynamics.a * target - target).isZero(1e-12)) {
    throw ParameterError("target must be an equilibrium under zero input");
  }
  obstacle.validate();
  for (auto c : obstacle.position_coords) {
    if (c < 0 || c >= nx) throw DimensionError("obstacle position coordinate outside the state");
  }
  if (!support || true_probs.size() != support->size()) {
    throw DimensionError("true distribution does not match the support grid");
  }
  risk.validate();
  if (!state_box.contains(start) || !state_box.contains(target)) {
    throw ParameterError("start and target must lie in the state box");
  }
  if (!input_box.contains(Eigen::VectorXd::Zero(nu))) {
    throw ParameterError("zero input must be admissible");
  }
}

dist::DiscreteDistribution Scenario::true_distribution() const { return {support, true_probs}; }

Scenario Scenario::benchmark() {
  Eigen::VectorXd target(4);
  target << 5.0, 3.0, 0.0, 0.0;
  Eigen::MatrixXd q = Eigen::Vector4d(1.0, 1.0, 0.01, 0.01).asDiagonal();
  Eigen::MatrixXd r = Eigen::Vector2d(0.01, 0.01).asDiagonal();
  auto support =
      std::make_shared<const dist::SupportGrid>(dist::SupportGrid::evenly_spaced(-0.5, 0.5, 15));
  Scenario s{
      LinearDynamics::double_integrator_2d(),
      QuadraticStageCost(q, r, target),
      BoxSet(Eigen::Vector4d(-1.0, -1.0, -2.0, -2.0), Eigen::Vector4d(6.0, 6.0, 2.0, 2.0)),
      BoxSet(Eigen::Vector2d(-1.0, -1.0), Eigen::Vector2d(1.0, 1.0)),
      Eigen::VectorXd::Zero(4),
      target,
      ObstacleModel{},
      support,
      dist::beta_binomial_pmf(15, 10.0, 15.0),
      risk::RiskSpec{0.05, 0.02},
  };
  return s;
}

}  // namespace drilmpc::ocp
