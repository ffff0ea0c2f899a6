//
// Copyright 2026 The vunlearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#ifndef VUNLEARN_ORACLE_DISCRETE_H_
#define VUNLEARN_ORACLE_DISCRETE_H_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vunlearn::oracle {

// Hard cap on dense table size. The oracle is for desk-scale verification.
inline constexpr std::size_t kMaxCells = 1'000'000;
// Probabilities below this are treated as exact zeros (0 log 0 := 0).
inline constexpr double kZeroProb = 1e-15;
inline constexpr double kMassTolerance = 1e-12;

struct Axis {
  std::string name;
  std::size_t cardinality = 0;

  bool operator==(const Axis&) const = default;
};

using VarSet = std::vector<std::string>;

// Dense joint distribution over named finite axes. Row-major: the last axis
// varies fastest.
class DiscreteJoint {
 public:
  DiscreteJoint(std::vector<Axis> axes, std::vector<double> probs);

  // Normalizes non-negative counts into a joint. Total count must be > 0.
  static DiscreteJoint from_counts(std::vector<Axis> axes,
                                   std::span<const double> counts);

  // Plug-in joint from aligned integer label columns; cardinalities are
  // taken from `axes`.
  static DiscreteJoint from_samples(
      std::vector<Axis> axes,
      std::span<const std::vector<std::int32_t>> columns);

  // Outer product of independent joints with disjoint axis names.
  static DiscreteJoint product(std::span<const DiscreteJoint> parts);

  const std::vector<Axis>& axes() const { return axes_; }
  const std::vector<double>& probs() const { return probs_; }
  std::size_t size() const { return probs_.size(); }

  bool has_axis(std::string_view name) const;
  std::size_t axis_index(std::string_view name) const;

  // Mixed-radix decode/encode over this joint's axes.
  std::vector<std::size_t> unflatten(std::size_t flat) const;
  std::size_t flatten(std::span<const std::size_t> index) const;

  // Marginal over `vars`, axes ordered as listed.
  DiscreteJoint marginal(const VarSet& vars) const;

 private:
  std::vector<Axis> axes_;
  std::vector<double> probs_;
};

// Row-stochastic transition P(out | in), stored row-major.
class DiscreteChannel {
 public:
  DiscreteChannel(std::size_t input_cardinality, std::size_t output_cardinality,
                  std::vector<double> transition);

  static DiscreteChannel identity(std::size_t cardinality);
  static DiscreteChannel constant(std::size_t input_cardinality,
                                  std::size_t output_cardinality = 1);
  // Deterministic map in -> mapping[in].
  static DiscreteChannel deterministic(std::span<const std::size_t> mapping,
                                       std::size_t output_cardinality);

  std::size_t input_cardinality() const { return in_; }
  std::size_t output_cardinality() const { return out_; }
  double operator()(std::size_t in, std::size_t out) const {
    return transition_[in * out_ + out];
  }
  const std::vector<double>& transition() const { return transition_; }

 private:
  std::size_t in_;
  std::size_t out_;
  std::vector<double> transition_;
};

// H(vars) in nats.
double entropy(const DiscreteJoint& joint, const VarSet& vars);

// I(a; b) in nats. a and b must be disjoint.
double mutual_information(const DiscreteJoint& joint, const VarSet& a,
                          const VarSet& b);

// I(a; b | given) in nats. All three sets pairwise disjoint.
double conditional_mutual_information(const DiscreteJoint& joint,
                                      const VarSet& a, const VarSet& b,
                                      const VarSet& given);

}  // namespace vunlearn::oracle

#endif  // VUNLEARN_ORACLE_DISCRETE_H_
