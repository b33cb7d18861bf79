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

#include <array>
#include <vector>

#include "drilmpc/distributions.hpp"
#include "drilmpc/risk.hpp"

namespace drilmpc::ocp {

/// x+ = A x + B u.
struct LinearDynamics {
  Eigen::MatrixXd a;
  Eigen::MatrixXd b;

  LinearDynamics(Eigen::MatrixXd a, Eigen::MatrixXd b);

  [[nodiscard]] Eigen::Index state_dim() const { return a.rows(); }
  [[nodiscard]] Eigen::Index input_dim() const { return b.cols(); }

  /// Planar double integrator with unit time step: state [z, y, vz, vy], input [az, ay].
  static LinearDynamics double_integrator_2d();
};

/// r(x, u) = (x_F - x)' Q (x_F - x) + u' R u.
struct QuadraticStageCost {
  Eigen::MatrixXd q;
  Eigen::MatrixXd r;
  Eigen::VectorXd target;

  QuadraticStageCost(Eigen::MatrixXd q, Eigen::MatrixXd r, Eigen::VectorXd target);
};

/// Axis-aligned box with finite bounds.
struct BoxSet {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  BoxSet(Eigen::VectorXd lower, Eigen::VectorXd upper);

  [[nodiscard]] bool contains(const Eigen::VectorXd& v, double tol = 0.0) const;
};

/// Square obstacle whose center moves along a fixed direction:
/// center(w) = nominal_center + direction * w. Positions are read from the
/// state through the coordinate indices in `position_coords`.
struct ObstacleModel {
  Eigen::Vector2d nominal_center{2.0, 2.0};
  Eigen::Vector2d direction{M_SQRT1_2, -M_SQRT1_2};
  double half_length = 0.2;
  std::array<Eigen::Index, 2> position_coords{0, 1};

  void validate() const;
  [[nodiscard]] Eigen::Vector2d center(double w) const { return nominal_center + direction * w; }
  [[nodiscard]] Eigen::Vector2d position(const Eigen::VectorXd& x) const;
};

inline constexpr int kNumFaces = 4;

/// Unit outward normals of the square's faces: +z, -z, +y, -y.
const std::array<Eigen::Vector2d, kNumFaces>& face_normals();

/// Inward distance from a position to each face of the obstacle realized at
/// w: half_length - h_j'(p - center(w)). All four are positive exactly when
/// p lies in the open square.
std::array<double, kNumFaces> face_depths(const ObstacleModel& obs, const Eigen::Vector2d& p, double w);

/// Face attaining the smallest inward distance, lowest index on ties.
int active_face(const ObstacleModel& obs, const Eigen::Vector2d& p, double w);

/// Penetration of the robot position into the obstacle realized at w: the
/// distance from the position to the complement of the open square. Zero
/// outside the square and on its boundary.
double g_eval(const ObstacleModel& obs, const Eigen::VectorXd& x, double w);

/// g_eval at every atom of the support, in support order.
std::vector<double> risk_values(const ObstacleModel& obs, const Eigen::VectorXd& x,
                                const dist::SupportGrid& support);

Eigen::VectorXd step(const LinearDynamics& dyn, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

double stage_cost(const QuadraticStageCost& cost, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

/// Everything that defines one motion-planning task.
struct Scenario {
  LinearDynamics dynamics;
  QuadraticStageCost cost;
  BoxSet state_box;
  BoxSet input_box;
  Eigen::VectorXd start;
  Eigen::VectorXd target;
  ObstacleModel obstacle;
  dist::SupportPtr support;
  std::vector<double> true_probs;
  risk::RiskSpec risk;

  void validate() const;
  [[nodiscard]] dist::DiscreteDistribution true_distribution() const;

  /// The mobile-robot benchmark: double integrator from [0,0,0,0] to
  /// [5,3,0,0] around a 0.4-wide square drifting about [2,2] with a
  /// Beta-binomial(14 trials; 10, 15) displacement on 15 atoms in [-0.5, 0.5].
  static Scenario benchmark();
};

}  // namespace drilmpc::ocp
