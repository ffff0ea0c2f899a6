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

#include "vunlearn/oracle/discrete.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "vunlearn/common/error.h"

namespace vunlearn::oracle {
namespace {

std::size_t checked_cells(const std::vector<Axis>& axes) {
  std::size_t cells = 1;
  std::set<std::string> names;
  for (const Axis& a : axes) {
    require(!a.name.empty(), ErrorCode::kInvariant, "axis with empty name");
    require(names.insert(a.name).second, ErrorCode::kInvariant,
            "duplicate axis name '" + a.name + "'");
    require(a.cardinality >= 1, ErrorCode::kInvariant,
            "axis '" + a.name + "' has zero cardinality");
    if (cells > kMaxCells / a.cardinality) {
      fail(ErrorCode::kSize, "joint state space exceeds " +
                                 std::to_string(kMaxCells) + " cells");
    }
    cells *= a.cardinality;
  }
  return cells;
}

double plogp_sum(const std::vector<double>& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > kZeroProb) h -= p * std::log(p);
  }
  return h;
}

void require_disjoint(const VarSet& a, const VarSet& b) {
  for (const auto& v : a) {
    if (std::find(b.begin(), b.end(), v) != b.end()) {
      fail(ErrorCode::kPrecondition,
           "variable sets overlap on '" + v + "'");
    }
  }
}

VarSet concat(const VarSet& a, const VarSet& b) {
  VarSet out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

DiscreteJoint::DiscreteJoint(std::vector<Axis> axes, std::vector<double> probs)
    : axes_(std::move(axes)), probs_(std::move(probs)) {
  const std::size_t cells = checked_cells(axes_);
  require(probs_.size() == cells, ErrorCode::kDimensionMismatch,
          "joint has " + std::to_string(probs_.size()) +
              " entries but axes span " + std::to_string(cells));
  double total = 0.0;
  for (double p : probs_) {
    require(std::isfinite(p) && p >= 0.0, ErrorCode::kInvariant,
            "joint entries must be finite and non-negative");
    total += p;
  }
  require(std::abs(total - 1.0) <= kMassTolerance, ErrorCode::kInvariant,
          "joint mass is " + std::to_string(total) + ", expected 1");
}

DiscreteJoint DiscreteJoint::from_counts(std::vector<Axis> axes,
                                         std::span<const double> counts) {
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  require(total > 0.0, ErrorCode::kPrecondition, "counts sum to zero");
  std::vector<double> probs(counts.begin(), counts.end());
  for (double& p : probs) p /= total;
  // Renormalize once more so rounding stays inside the mass tolerance.
  const double mass = std::accumulate(probs.begin(), probs.end(), 0.0);
  for (double& p : probs) p /= mass;
  return DiscreteJoint(std::move(axes), std::move(probs));
}

DiscreteJoint DiscreteJoint::from_samples(
    std::vector<Axis> axes, std::span<const std::vector<std::int32_t>> columns) {
  require(columns.size() == axes.size(), ErrorCode::kDimensionMismatch,
          "one label column per axis required");
  const std::size_t cells = checked_cells(axes);
  const std::size_t n = columns.empty() ? 0 : columns[0].size();
  require(n > 0, ErrorCode::kPrecondition, "no samples");
  std::vector<double> counts(cells, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t flat = 0;
    for (std::size_t a = 0; a < axes.size(); ++a) {
      require(columns[a].size() == n, ErrorCode::kDimensionMismatch,
              "label columns differ in length");
      const std::int32_t v = columns[a][i];
      require(v >= 0 && static_cast<std::size_t>(v) < axes[a].cardinality,
              ErrorCode::kPrecondition,
              "label out of range on axis '" + axes[a].name + "'");
      flat = flat * axes[a].cardinality + static_cast<std::size_t>(v);
    }
    counts[flat] += 1.0;
  }
  return from_counts(std::move(axes), counts);
}

DiscreteJoint DiscreteJoint::product(std::span<const DiscreteJoint> parts) {
  std::vector<Axis> axes;
  std::vector<double> probs{1.0};
  for (const DiscreteJoint& part : parts) {
    axes.insert(axes.end(), part.axes().begin(), part.axes().end());
    checked_cells(axes);
    std::vector<double> next;
    next.reserve(probs.size() * part.size());
    for (double p : probs) {
      for (double q : part.probs()) next.push_back(p * q);
    }
    probs = std::move(next);
  }
  return DiscreteJoint(std::move(axes), std::move(probs));
}

bool DiscreteJoint::has_axis(std::string_view name) const {
  return std::any_of(axes_.begin(), axes_.end(),
                     [&](const Axis& a) { return a.name == name; });
}

std::size_t DiscreteJoint::axis_index(std::string_view name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].name == name) return i;
  }
  fail(ErrorCode::kPrecondition,
       "unknown variable '" + std::string(name) + "'");
}

std::vector<std::size_t> DiscreteJoint::unflatten(std::size_t flat) const {
  std::vector<std::size_t> index(axes_.size());
  for (std::size_t a = axes_.size(); a-- > 0;) {
    index[a] = flat % axes_[a].cardinality;
    flat /= axes_[a].cardinality;
  }
  return index;
}

std::size_t DiscreteJoint::flatten(std::span<const std::size_t> index) const {
  std::size_t flat = 0;
  for (std::size_t a = 0; a < axes_.size(); ++a) {
    flat = flat * axes_[a].cardinality + index[a];
  }
  return flat;
}

DiscreteJoint DiscreteJoint::marginal(const VarSet& vars) const {
  std::vector<std::size_t> picks;
  std::vector<Axis> axes;
  for (const auto& v : vars) {
    const std::size_t idx = axis_index(v);
    require(std::find(picks.begin(), picks.end(), idx) == picks.end(),
            ErrorCode::kPrecondition, "variable '" + v + "' listed twice");
    picks.push_back(idx);
    axes.push_back(axes_[idx]);
  }
  std::size_t cells = 1;
  for (const Axis& a : axes) cells *= a.cardinality;
  std::vector<double> out(cells, 0.0);

  // Walk the table with an odometer instead of dividing every index.
  std::vector<std::size_t> index(axes_.size(), 0);
  for (std::size_t flat = 0; flat < probs_.size(); ++flat) {
    std::size_t target = 0;
    for (std::size_t k = 0; k < picks.size(); ++k) {
      target = target * axes[k].cardinality + index[picks[k]];
    }
    out[target] += probs_[flat];
    for (std::size_t a = axes_.size(); a-- > 0;) {
      if (++index[a] < axes_[a].cardinality) break;
      index[a] = 0;
    }
  }
  const double mass = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& p : out) p /= mass;
  return DiscreteJoint(std::move(axes), std::move(out));
}

DiscreteChannel::DiscreteChannel(std::size_t input_cardinality,
                                 std::size_t output_cardinality,
                                 std::vector<double> transition)
    : in_(input_cardinality),
      out_(output_cardinality),
      transition_(std::move(transition)) {
  require(in_ >= 1 && out_ >= 1, ErrorCode::kInvariant,
          "channel cardinalities must be positive");
  require(transition_.size() == in_ * out_, ErrorCode::kDimensionMismatch,
          "channel table size does not match cardinalities");
  for (std::size_t i = 0; i < in_; ++i) {
    double row = 0.0;
    for (std::size_t o = 0; o < out_; ++o) {
      const double p = transition_[i * out_ + o];
      require(std::isfinite(p) && p >= 0.0, ErrorCode::kInvariant,
              "channel entries must be finite and non-negative");
      row += p;
    }
    require(std::abs(row - 1.0) <= kMassTolerance, ErrorCode::kInvariant,
            "channel row " + std::to_string(i) + " sums to " +
                std::to_string(row));
  }
}

DiscreteChannel DiscreteChannel::identity(std::size_t cardinality) {
  std::vector<std::size_t> map(cardinality);
  std::iota(map.begin(), map.end(), std::size_t{0});
  return deterministic(map, cardinality);
}

DiscreteChannel DiscreteChannel::constant(std::size_t input_cardinality,
                                          std::size_t output_cardinality) {
  std::vector<std::size_t> map(input_cardinality, 0);
  return deterministic(map, output_cardinality);
}

DiscreteChannel DiscreteChannel::deterministic(
    std::span<const std::size_t> mapping, std::size_t output_cardinality) {
  std::vector<double> t(mapping.size() * output_cardinality, 0.0);
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    require(mapping[i] < output_cardinality, ErrorCode::kPrecondition,
            "deterministic map target out of range");
    t[i * output_cardinality + mapping[i]] = 1.0;
  }
  return DiscreteChannel(mapping.size(), output_cardinality, std::move(t));
}

double entropy(const DiscreteJoint& joint, const VarSet& vars) {
  if (vars.empty()) return 0.0;
  return plogp_sum(joint.marginal(vars).probs());
}

double mutual_information(const DiscreteJoint& joint, const VarSet& a,
                          const VarSet& b) {
  require_disjoint(a, b);
  return entropy(joint, a) + entropy(joint, b) - entropy(joint, concat(a, b));
}

double conditional_mutual_information(const DiscreteJoint& joint,
                                      const VarSet& a, const VarSet& b,
                                      const VarSet& given) {
  require_disjoint(a, b);
  require_disjoint(a, given);
  require_disjoint(b, given);
  return entropy(joint, concat(a, given)) + entropy(joint, concat(b, given)) -
         entropy(joint, concat(concat(a, b), given)) - entropy(joint, given);
}

}  // namespace vunlearn::oracle
