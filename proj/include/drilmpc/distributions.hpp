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

#include <cstddef>
#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace drilmpc::dist {

/// Strictly increasing finite set of scalar uncertainty values.
class SupportGrid {
 public:
  explicit SupportGrid(std::vector<double> points);

  /// `count` points spread evenly over [first, last]; a single point sits at `first`.
  static SupportGrid evenly_spaced(double first, double last, std::size_t count);

  [[nodiscard]] std::size_t size() const { return points_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return points_[i]; }
  [[nodiscard]] const std::vector<double>& points() const { return points_; }

  friend bool operator==(const SupportGrid&, const SupportGrid&) = default;

 private:
  std::vector<double> points_;
};

using SupportPtr = std::shared_ptr<const SupportGrid>;

/// Probability vector over a shared support grid. Immutable once built.
class DiscreteDistribution {
 public:
  /// Throws ParameterError unless probs are nonnegative, sum to one within
  /// 1e-12 and match the support size.
  DiscreteDistribution(SupportPtr support, std::vector<double> probs);

  static DiscreteDistribution uniform(SupportPtr support);
  static DiscreteDistribution point_mass(SupportPtr support, std::size_t index);

  [[nodiscard]] const SupportGrid& support() const { return *support_; }
  [[nodiscard]] const SupportPtr& support_ptr() const { return support_; }
  [[nodiscard]] std::size_t size() const { return probs_.size(); }
  [[nodiscard]] double operator[](std::size_t i) const { return probs_[i]; }
  [[nodiscard]] const std::vector<double>& probs() const { return probs_; }

  [[nodiscard]] bool same_support(const DiscreteDistribution& other) const;

 private:
  SupportPtr support_;
  std::vector<double> probs_;
};

/// Observed support indices, grouped into the batches in which they arrived.
class SampleSet {
 public:
  void append(std::span<const int> batch);

  [[nodiscard]] std::size_t size() const { return indices_.size(); }
  [[nodiscard]] bool empty() const { return indices_.empty(); }
  [[nodiscard]] const std::vector<int>& indices() const { return indices_; }
  [[nodiscard]] const std::vector<std::size_t>& batch_sizes() const { return batch_sizes_; }

 private:
  std::vector<int> indices_;
  std::vector<std::size_t> batch_sizes_;
};

/// Explicitly seeded generator; every random draw in the library goes through one.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform double in [0, 1) built from the top 53 bits of one engine output.
  double uniform();
  std::uint64_t next() { return engine_(); }

  /// Textual engine state; `restore` continues the stream exactly.
  [[nodiscard]] std::string state() const;
  void restore(const std::string& text);

 private:
  std::mt19937_64 engine_;
};

/// Beta-binomial pmf over k = 0..num_outcomes-1, i.e. num_outcomes-1 trials.
std::vector<double> beta_binomial_pmf(int num_outcomes, double alpha, double beta);

/// n i.i.d. support indices by inverse-CDF lookup.
std::vector<int> sample(const DiscreteDistribution& dist, Rng& rng, std::size_t n);

/// Relative frequencies of the indices. Throws ParameterError on an empty input.
DiscreteDistribution empirical(std::span<const int> indices, SupportPtr support);
DiscreteDistribution empirical(const SampleSet& samples, SupportPtr support);

/// Half the l1 distance. Throws DimensionError if the supports differ.
double tv_distance(const DiscreteDistribution& p, const DiscreteDistribution& q);

}  // namespace drilmpc::dist
