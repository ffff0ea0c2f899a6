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

#include "vunlearn/oracle/factor_system.h"

#include <cmath>
#include <functional>
#include <random>

#include "gtest/gtest.h"
#include "temp_dir.h"
#include "vunlearn/common/error.h"

namespace vunlearn::oracle {
namespace {

const double kLn2 = std::log(2.0);
const std::vector<double> kBit{0.5, 0.5};

// x = (y, r, s) as a mixed-radix index, s = z.
FactorSystem identity_bits(DiscreteChannel h) {
  return make_factor_system(kBit, kBit,
                            {SensitivePair{kBit, DiscreteChannel::identity(2)}},
                            DiscreteChannel::identity(8), std::move(h));
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

TEST(ComposeTest, LosslessChainKeepsTaskEntropy) {
  const auto chain =
      compose_markov_chain(identity_bits(DiscreteChannel::identity(8)));
  EXPECT_NEAR(mutual_information(chain, {"h"}, {"y"}), kLn2, 1e-14);
  EXPECT_NEAR(mutual_information(chain, {"h"}, {"x"}), 3 * kLn2, 1e-14);
}

TEST(ComposeTest, ConstantChannelCarriesNothing) {
  const auto chain =
      compose_markov_chain(identity_bits(DiscreteChannel::constant(8)));
  for (const char* v : {"y", "r", "s0", "z0", "x"}) {
    EXPECT_NEAR(mutual_information(chain, {"h"}, {v}), 0.0, 1e-15) << v;
  }
}

TEST(ComposeTest, HIsConditionallyIndependentOfFactorsGivenX) {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 20; ++t) {
    const auto chain = compose_markov_chain(random_factor_system(rng));
    EXPECT_NEAR(conditional_mutual_information(chain, {"h"},
                                               {"y", "r", "s0", "z0"}, {"x"}),
                0.0, 1e-10);
  }
}

TEST(ComposeTest, DataProcessingInequalityOnRandomChains) {
  std::mt19937_64 rng(7);
  RandomSystemOptions opts;
  opts.sensitive_count = 2;
  for (int t = 0; t < 100; ++t) {
    const auto chain = compose_markov_chain(random_factor_system(rng, opts));
    for (const char* v : {"y", "r", "s0", "s1", "z0", "z1"}) {
      EXPECT_LE(mutual_information(chain, {"h"}, {v}),
                mutual_information(chain, {"x"}, {v}) + 1e-10)
          << "factor " << v << " system " << t;
    }
  }
}

TEST(ComposeTest, ChannelDimensionMismatchIsRejected) {
  EXPECT_EQ(code_of([] {
              compose_markov_chain(make_factor_system(
                  kBit, kBit,
                  {SensitivePair{kBit, DiscreteChannel::identity(2)}},
                  DiscreteChannel::identity(6), DiscreteChannel::identity(6)));
            }),
            ErrorCode::kDimensionMismatch);
}

TEST(ChainTest, LosslessIdentityChainIsTight) {
  const auto c = verify_detachment_chain(identity_bits(DiscreteChannel::identity(8)));
  EXPECT_NEAR(c.lhs, 2 * kLn2, 1e-14);
  EXPECT_NEAR(c.rhs, 3 * kLn2 - kLn2, 1e-14);
  EXPECT_NEAR(c.slack, 0.0, 1e-14);
  EXPECT_TRUE(c.holds);
}

TEST(ChainTest, KeepingOnlyTaskBlockZeroesBothSides) {
  std::vector<std::size_t> to_y(8);
  for (std::size_t x = 0; x < 8; ++x) to_y[x] = x / 4;
  const auto c =
      verify_detachment_chain(identity_bits(DiscreteChannel::deterministic(to_y, 2)));
  EXPECT_NEAR(c.lhs, 0.0, 1e-14);
  EXPECT_NEAR(c.rhs, 0.0, 1e-14);
  EXPECT_TRUE(c.holds);
}

TEST(ChainTest, HoldsOnRandomSystems) {
  std::mt19937_64 rng(2026);
  for (std::size_t k : {1, 2}) {
    RandomSystemOptions opts;
    opts.sensitive_count = k;
    for (int t = 0; t < 100; ++t) {
      const auto c = verify_detachment_chain(random_factor_system(rng, opts));
      EXPECT_TRUE(c.holds) << "slack " << c.slack;
      EXPECT_GE(c.slack, -kChainTolerance);
    }
  }
}

TEST(ChainTest, DependentFactorsAreRejectedBeforeComputation) {
  // y and r perfectly correlated.
  std::vector<double> p(16, 0.0);
  for (int v = 0; v < 2; ++v) {
    for (int s = 0; s < 2; ++s) p[v * 8 + v * 4 + s * 2 + s] = 0.25;
  }
  FactorSystem bad{DiscreteJoint({{"y", 2}, {"r", 2}, {"s0", 2}, {"z0", 2}}, p),
                   DiscreteChannel::identity(8), DiscreteChannel::identity(8)};
  EXPECT_EQ(code_of([&] { verify_detachment_chain(bad); }), ErrorCode::kInvariant);
}

TEST(ChainTest, SensitiveLeakOutsideChannelIsRejected) {
  // z0 correlated with y rather than only through s0.
  std::vector<double> p(16, 0.0);
  for (int y = 0; y < 2; ++y) {
    for (int r = 0; r < 2; ++r) {
      for (int s = 0; s < 2; ++s) p[y * 8 + r * 4 + s * 2 + y] = 0.125;
    }
  }
  FactorSystem bad{DiscreteJoint({{"y", 2}, {"r", 2}, {"s0", 2}, {"z0", 2}}, p),
                   DiscreteChannel::identity(8), DiscreteChannel::identity(8)};
  EXPECT_EQ(code_of([&] { validate(bad); }), ErrorCode::kInvariant);
}

TEST(RandomSystemTest, RespectsCardinalityCapAndValidates) {
  std::mt19937_64 rng(1);
  for (int t = 0; t < 50; ++t) {
    const auto sys = random_factor_system(rng);
    for (const auto& a : sys.factor_joint.axes()) {
      EXPECT_LE(a.cardinality, 4u);
      EXPECT_GE(a.cardinality, 1u);
    }
    EXPECT_NO_THROW(validate(sys));
  }
}

TEST(FixtureTest, SaveLoadRoundTrip) {
  std::mt19937_64 rng(9);
  const auto sys = random_factor_system(rng);
  testing::TempDir dir;
  save_factor_system(sys, dir.path());
  const auto back = load_factor_system(dir.path());
  EXPECT_EQ(back.factor_joint.axes(), sys.factor_joint.axes());
  EXPECT_EQ(back.factor_joint.probs(), sys.factor_joint.probs());
  EXPECT_EQ(back.x_channel.transition(), sys.x_channel.transition());
  EXPECT_EQ(back.h_channel.transition(), sys.h_channel.transition());
}

}  // namespace
}  // namespace vunlearn::oracle
