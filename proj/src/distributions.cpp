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

#include "drilmpc/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

#include "drilmpc/errors.hpp"

namespace drilmpc::dist {

SupportGrid::SupportGrid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw ParameterError("support grid must have at least one point");
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!std::isfinite(points_[i])) throw ParameterError("support grid points must be finite");
    if (i > 0 && !(points_[i] > points_[i - 1])) {
      throw ParameterError(fmt::format("support grid not strictly increasing at index {}", i));
    }
  }
}

SupportGrid SupportGrid::evenly_spaced(double first, double last, std::size_t count) {
  if (count == 0) throw ParameterError("support grid must have at least one point");
  std::vector<double> pts(count);
  for (std::size_t i = 0; i < count; ++i) {
    pts[i] = count == 1 ? first
                        : first + (last - first) * static_cast<double>(i) /
                                      static_cast<double>(count - 1);
  }
  return SupportGrid(std::move(pts));
}

DiscreteDistribution::DiscreteDistribution(SupportPtr support, std::vector<double> probs)
    : support_(std::move(support)), probs_(std::move(probs)) {
  if (!support_) throw ParameterError("distribution needs a support grid");
  if (probs_.size() != support_->size()) {
    throw DimensionError(fmt::format("distribution has {} probabilities for {} support points",
                                     probs_.size(), support_->size()));
  }
  double total = 0.0;
  for (double p : probs_) {
    if (!(p >= 0.0)) throw ParameterError("probabilities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw ParameterError(fmt::format("probabilities sum to {:.17g}, not 1", total));
  }
}

DiscreteDistribution DiscreteDistribution::uniform(SupportPtr support) {
  const auto n = support->size();
  return {std::move(support), std::vector<double>(n, 1.0 / static_cast<double>(n))};
}

DiscreteDistribution DiscreteDistribution::point_mass(SupportPtr support, std::size_t index) {
  std::vector<double> probs(support->size(), 0.0);
  probs.at(index) = 1.0;
  return {std::move(support), std::move(probs)};
}

bool DiscreteDistribution::same_support(const DiscreteDistribution& other) const {
  return support_ == other.support_ || *support_ == *other.support_;
}

void SampleSet::append(std::span<const int> batch) {
  indices_.insert(indices_.end(), batch.begin(), batch.end());
  batch_sizes_.push_back(batch.size());
}

std::string Rng::state() const {
  std::ostringstream out;
  out << engine_;
  return out.str();
}

void Rng::restore(const std::string& text) {
  std::istringstream in(text);
  std::mt19937_64 engine;
  in >> engine;
  if (!in) throw ParameterError("malformed generator state");
  engine_ = engine;
}

double Rng::uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

std::vector<double> beta_binomial_pmf(int num_outcomes, double alpha, double beta) {
  if (num_outcomes < 1) throw ParameterError("beta-binomial needs at least one outcome");
  if (!(alpha > 0.0) || !(beta > 0.0)) {
    throw ParameterError(fmt::format("beta-binomial shapes must be positive (alpha={}, beta={})",
                                     alpha, beta));
  }
  const int trials = num_outcomes - 1;
  const double log_norm = std::lgamma(alpha) + std::lgamma(beta) - std::lgamma(alpha + beta);
  std::vector<double> pmf(static_cast<std::size_t>(num_outcomes));
  for (int k = 0; k <= trials; ++k) {
    const double log_choose =
        std::lgamma(trials + 1.0) - std::lgamma(k + 1.0) - std::lgamma(trials - k + 1.0);
    const double log_beta = std::lgamma(k + alpha) + std::lgamma(trials - k + beta) -
                            std::lgamma(trials + alpha + beta);
    pmf[static_cast<std::size_t>(k)] = std::exp(log_choose + log_beta - log_norm);
  }
  // lgamma round-off leaves the total a few ulps away from one.
  const double total = std::accumulate(pmf.begin(), pmf.end(), 0.0);
  for (double& p : pmf) p /= total;
  return pmf;
}

std::vector<int> sample(const DiscreteDistribution& dist, Rng& rng, std::size_t n) {
  std::vector<double> cdf(dist.size());
  std::partial_sum(dist.probs().begin(), dist.probs().end(), cdf.begin());
  std::vector<int> out;
  out.reserve(n);
  const auto last = static_cast<int>(dist.size()) - 1;
  for (std::size_t i = 0; i < n; ++i) {
    const double u = rng.uniform();
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    int idx = static_cast<int>(it - cdf.begin());
    // Guard against a cdf tail that rounds below u, and skip zero-mass atoms.
    idx = std::min(idx, last);
    while (idx > 0 && dist[static_cast<std::size_t>(idx)] == 0.0) --idx;
    out.push_back(idx);
  }
  return out;
}

DiscreteDistribution empirical(std::span<const int> indices, SupportPtr support) {
  if (indices.empty()) throw ParameterError("empirical distribution of an empty sample set");
  std::vector<double> counts(support->size(), 0.0);
  for (int i : indices) {
    if (i < 0 || static_cast<std::size_t>(i) >= counts.size()) {
      throw DimensionError(fmt::format("sample index {} outside support of size {}", i,
                                       counts.size()));
    }
    counts[static_cast<std::size_t>(i)] += 1.0;
  }
  const auto n = static_cast<double>(indices.size());
  for (double& c : counts) c /= n;
  // Division by N can drift the total by an ulp or two; fold it into the largest atom.
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  *std::max_element(counts.begin(), counts.end()) += 1.0 - total;
  return {std::move(support), std::move(counts)};
}

DiscreteDistribution empirical(const SampleSet& samples, SupportPtr support) {
  return empirical(std::span<const int>(samples.indices()), std::move(support));
}

double tv_distance(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  if (!p.same_support(q)) throw DimensionError("total variation needs a common support");
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) sum += std::abs(p[i] - q[i]);
  return 0.5 * sum;
}

}  // namespace drilmpc::dist
