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

#ifndef VUNLEARN_ORACLE_FACTOR_SYSTEM_H_
#define VUNLEARN_ORACLE_FACTOR_SYSTEM_H_

#include <cstddef>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "vunlearn/oracle/discrete.h"

namespace vunlearn::oracle {

// Axis naming convention for factor systems:
//   "y"            task factor
//   "r"            nuisance factor
//   "s0".."s{k}"   sensitive information, one per attribute
//   "z0".."z{k}"   sensitive attribute labels, z_i -> s_i
//   "x", "h"       added by compose_markov_chain
std::string sensitive_info_axis(std::size_t i);
std::string sensitive_label_axis(std::size_t i);

// A finite generative system (y, r, s, z) -> x -> h. The x channel reads the
// mixed-radix index of (y, r, s0, s1, ...) in that order.
struct FactorSystem {
  DiscreteJoint factor_joint;
  DiscreteChannel x_channel;
  DiscreteChannel h_channel;

  std::size_t sensitive_count() const;
  // Cardinality of the x-channel input space |y|·|r|·Π|s_i|.
  std::size_t factor_input_cardinality() const;
};

// One sensitive attribute: z ~ z_marginal, s | z ~ z_to_s.
struct SensitivePair {
  std::vector<double> z_marginal;
  DiscreteChannel z_to_s;
};

// Builds a system whose factor joint is P(y) P(r) Π_i P(z_i) P(s_i | z_i),
// so the independence and z -> s invariants hold by construction.
FactorSystem make_factor_system(std::vector<double> y_marginal,
                                std::vector<double> r_marginal,
                                std::vector<SensitivePair> sensitive,
                                DiscreteChannel x_channel,
                                DiscreteChannel h_channel);

// Throws ErrorCode::kInvariant when y, r, s_i are not mutually independent,
// when some z_i is not conditionally independent of the other factors given
// s_i, or when channel dimensions disagree with factor cardinalities.
void validate(const FactorSystem& system);

// Full joint over (y, r, s..., z..., x, h).
DiscreteJoint compose_markov_chain(const FactorSystem& system);

struct ChainCheck {
  double lhs = 0.0;    // I(h,r) + Σ I(h,s_i)
  double rhs = 0.0;    // I(h,x) - I(h,y)
  double slack = 0.0;  // rhs - lhs
  bool holds = false;
};

inline constexpr double kChainTolerance = 1e-10;

// Numerically checks I(h,s) + I(h,r) <= I(h,x) - I(h,y) with the explicit
// generative factors standing in for the argmax variables.
ChainCheck verify_detachment_chain(const FactorSystem& system);

struct RandomSystemOptions {
  std::size_t max_cardinality = 4;
  std::size_t sensitive_count = 1;
  std::size_t max_x_cardinality = 8;
  std::size_t max_h_cardinality = 6;
  // Probability that a channel is drawn as a deterministic map instead of a
  // dense stochastic table.
  double deterministic_channel_prob = 0.3;
};

FactorSystem random_factor_system(std::mt19937_64& rng,
                                  const RandomSystemOptions& options = {});

// Random row-stochastic channel (Dirichlet(1) rows).
DiscreteChannel random_channel(std::mt19937_64& rng, std::size_t in,
                               std::size_t out);
std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k);

// Fixture serialization: a directory holding meta.json and data.bin
// (little-endian float64 factor joint, then x and h transition tables).
void save_factor_system(const FactorSystem& system,
                        const std::filesystem::path& dir);
FactorSystem load_factor_system(const std::filesystem::path& dir);

}  // namespace vunlearn::oracle

#endif  // VUNLEARN_ORACLE_FACTOR_SYSTEM_H_
