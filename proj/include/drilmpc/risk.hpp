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

#include <span>
#include <vector>

#include "drilmpc/distributions.hpp"

namespace drilmpc::risk {

/// Slack allowed when comparing a worst-case CVaR against its tolerance.
inline constexpr double kFeasibilityTolerance = 1e-6;

/// Total-variation ball {mu : TV(mu, center) <= radius} around an empirical
/// distribution. `confidence` is carried for reporting only.
struct AmbiguitySet {
  dist::DiscreteDistribution center;
  double radius = 0.0;
  double confidence = 0.0;

  AmbiguitySet(dist::DiscreteDistribution center, double radius, double confidence = 0.0);
};

/// CVaR level beta and tolerance delta of the constraint CVaR_beta[g] <= delta.
struct RiskSpec {
  double beta = 0.05;
  double delta = 0.02;

  void validate() const;
};

/// inf_t { t + E[Z - t]_+ / beta }. `values` are the outcomes of Z on the
/// support of `dist`.
double cvar(std::span<const double> values, const dist::DiscreteDistribution& dist, double beta);

/// Left (1 - beta)-quantile: inf { z : P(Z <= z) >= 1 - beta }.
double var(std::span<const double> values, const dist::DiscreteDistribution& dist, double beta);

struct WorstCaseCvar {
  double value = 0.0;
  /// Derivative of `value` with respect to each outcome: the worst-case tail
  /// distribution. Nonnegative and sums to one.
  std::vector<double> tail_weights;
};

/// sup over the TV ball of CVaR_beta, from the finite dual program over
/// (lambda, eta, nu, gamma1, gamma2) with the positive part linearized.
WorstCaseCvar worst_case_cvar_dual_detail(std::span<const double> values,
                                          const AmbiguitySet& amb, double beta);
double worst_case_cvar_dual(std::span<const double> values, const AmbiguitySet& amb,
                            double beta);

/// Same quantity from the primal program: maximize q'values over tail
/// weights 0 <= q <= mu / beta with mu in the TV ball.
double worst_case_cvar_primal(std::span<const double> values, const AmbiguitySet& amb,
                              double beta);

/// worst_case_cvar_dual(values) <= delta + kFeasibilityTolerance.
bool dr_risk_satisfied(std::span<const double> values, const AmbiguitySet& amb,
                       const RiskSpec& spec);

}  // namespace drilmpc::risk
