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

#ifndef VUNLEARN_TESTS_DISCRETE_SAMPLING_H_
#define VUNLEARN_TESTS_DISCRETE_SAMPLING_H_

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "vunlearn/oracle/discrete.h"

namespace vunlearn::testing {

// Draws n (feature, label) pairs from the (feature_axis, label_axis)
// marginal of a joint. Features are one-hot codes of the feature value.
struct LabeledSample {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  int classes = 0;
};

inline LabeledSample sample_pairs(const oracle::DiscreteJoint& joint,
                                  const std::string& feature_axis,
                                  const std::string& label_axis,
                                  std::size_t n, std::mt19937_64& rng) {
  const auto m = joint.marginal({feature_axis, label_axis});
  const std::size_t fc = m.axes()[0].cardinality;
  const std::size_t lc = m.axes()[1].cardinality;
  std::vector<double> cdf(m.probs().size());
  std::partial_sum(m.probs().begin(), m.probs().end(), cdf.begin());
  std::uniform_real_distribution<double> u(0.0, cdf.back());
  LabeledSample out;
  out.features = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n),
                                       static_cast<Eigen::Index>(fc));
  out.labels.resize(n);
  out.classes = static_cast<int>(lc);
  for (std::size_t i = 0; i < n; ++i) {
    const auto cell = static_cast<std::size_t>(
        std::upper_bound(cdf.begin(), cdf.end(), u(rng)) - cdf.begin());
    const std::size_t c = std::min(cell, cdf.size() - 1);
    out.features(static_cast<Eigen::Index>(i),
                 static_cast<Eigen::Index>(c / lc)) = 1.0;
    out.labels[i] = static_cast<int>(c % lc);
  }
  return out;
}

}  // namespace vunlearn::testing

#endif  // VUNLEARN_TESTS_DISCRETE_SAMPLING_H_
