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

#include "vunlearn/synthgen/dataset.h"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "gtest/gtest.h"
#include "json.hpp"
#include "temp_dir.h"
#include "vunlearn/common/container.h"
#include "vunlearn/common/error.h"
#include "vunlearn/oracle/discrete.h"

namespace vunlearn::synthgen {
namespace {

GeneratorSpec injective_spec() {
  GeneratorSpec s;
  s.task_classes = 2;
  s.sensitive_classes = {2};
  s.nuisance_dim = 0;
  s.embed_dim_per_factor = 1;
  s.mixing = Mixing::kIdentity;
  s.noise_std = 0.0;
  s.seed = 7;
  return s;
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

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

double plug_in_yz(const FactorDataset& ds) {
  std::vector<std::vector<std::int32_t>> cols(2);
  for (const auto& s : ds.samples) {
    cols[0].push_back(s.y);
    cols[1].push_back(s.z[0]);
  }
  const auto j = oracle::DiscreteJoint::from_samples(
      {{"y", static_cast<std::size_t>(ds.spec.task_classes)},
       {"z", static_cast<std::size_t>(ds.spec.sensitive_classes[0])}},
      cols);
  return oracle::mutual_information(j, {"y"}, {"z"});
}

TEST(GenerateTest, EightSampleSignedCodes) {
  const auto ds = generate_dataset(injective_spec(), 8);
  ASSERT_EQ(ds.size(), 8u);
  EXPECT_EQ(ds.x_dim(), 2u);
  std::set<std::pair<int, int>> seen_labels;
  std::set<std::vector<float>> seen_x;
  for (const auto& s : ds.samples) {
    EXPECT_EQ(s.x[0], s.y == 1 ? 1.0f : -1.0f);
    EXPECT_EQ(s.x[1], s.z[0] == 1 ? 1.0f : -1.0f);
    seen_labels.insert({s.y, s.z[0]});
    seen_x.insert(s.x);
  }
  // x determines (y, z): as many distinct x as distinct label pairs.
  EXPECT_EQ(seen_x.size(), seen_labels.size());
}

TEST(GenerateTest, SameSeedIsBitIdentical) {
  const auto a = generate_dataset(injective_spec(), 4);
  const auto b = generate_dataset(injective_spec(), 4);
  EXPECT_EQ(a, b);
  EXPECT_EQ(payload_checksum(a), payload_checksum(b));
}

TEST(GenerateTest, DifferentSeedDiffers) {
  auto spec = injective_spec();
  const auto a = generate_dataset(spec, 64);
  spec.seed = 8;
  EXPECT_NE(payload_checksum(a), payload_checksum(generate_dataset(spec, 64)));
}

TEST(GenerateTest, LabelsAreNearlyIndependentUnderMixingAndNoise) {
  GeneratorSpec s;
  s.task_classes = 2;
  s.sensitive_classes = {2};
  s.nuisance_dim = 1;
  s.nuisance_kind = NuisanceKind::kDiscrete;
  s.nuisance_cardinality = 2;
  s.embed_dim_per_factor = 2;
  s.mixing = Mixing::kFixedOrthogonal;
  s.mixing_seed = 3;
  s.noise_std = 0.01;
  s.seed = 11;
  EXPECT_LT(plug_in_yz(generate_dataset(s, 2000)), 0.005);
}

TEST(GenerateTest, ObservationDimension) {
  auto s = injective_spec();
  s.embed_dim_per_factor = 3;
  s.sensitive_classes = {2, 3};
  EXPECT_EQ(observation_dim(s), 9u);
  s.nuisance_dim = 2;
  s.nuisance_kind = NuisanceKind::kDiscrete;
  EXPECT_EQ(observation_dim(s), 15u);
  s.nuisance_kind = NuisanceKind::kContinuousUniform;
  EXPECT_EQ(observation_dim(s), 11u);
}

TEST(GenerateTest, ExhaustivelyInjectiveWithoutNoise) {
  GeneratorSpec s;
  s.task_classes = 3;
  s.sensitive_classes = {2, 4};
  s.nuisance_dim = 1;
  s.nuisance_kind = NuisanceKind::kDiscrete;
  s.nuisance_cardinality = 3;
  s.embed_dim_per_factor = 2;
  s.mixing = Mixing::kFixedOrthogonal;
  s.mixing_seed = 5;
  s.seed = 1;
  const auto ds = generate_dataset(s, 3000);
  std::map<std::vector<float>, std::vector<int>> owner;
  std::set<std::vector<int>> tuples;
  for (const auto& smp : ds.samples) {
    std::vector<int> t{smp.y, smp.z[0], smp.z[1], smp.r_discrete[0]};
    tuples.insert(t);
    auto [it, inserted] = owner.emplace(smp.x, t);
    if (!inserted) EXPECT_EQ(it->second, t);
  }
  EXPECT_EQ(tuples.size(), 3u * 2u * 4u * 3u);
}

TEST(GenerateTest, MixingMatrixIsOrthogonal) {
  GeneratorSpec s = injective_spec();
  s.embed_dim_per_factor = 2;
  s.mixing = Mixing::kFixedOrthogonal;
  s.mixing_seed = 9;
  const auto m = mixing_matrix(s);
  EXPECT_TRUE((m.transpose() * m)
                  .isApprox(Eigen::MatrixXd::Identity(m.rows(), m.cols()),
                            1e-12));
}

TEST(GenerateTest, SplitIsDisjointAndCovering) {
  const auto ds = generate_dataset(injective_spec(), 101);
  std::vector<int> hits(101, 0);
  for (const auto* part : {&ds.split.train, &ds.split.validation,
                           &ds.split.test}) {
    for (std::size_t i : *part) ++hits[i];
  }
  for (int h : hits) EXPECT_EQ(h, 1);
  EXPECT_EQ(ds.split.train.size(), 61u);
}

TEST(GenerateTest, FactorPairsLookIndependent) {
  GeneratorSpec s = injective_spec();
  s.sensitive_classes = {3};
  s.embed_dim_per_factor = 2;
  const std::size_t n = 5000;
  const auto ds = generate_dataset(s, n);
  EXPECT_LE(plug_in_yz(ds), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(GenerateTest, PlugInErrorShrinksWithSampleSize) {
  for (std::uint64_t seed : {21, 22}) {
    GeneratorSpec s = injective_spec();
    s.task_classes = 3;
    s.sensitive_classes = {3};
    s.embed_dim_per_factor = 2;
    s.seed = seed;
    const double small = plug_in_yz(generate_dataset(s, 1000));
    const double large = plug_in_yz(generate_dataset(s, 10000));
    // The generator-level value is exactly 0.
    EXPECT_LT(large, small) << "seed " << seed;
  }
}

TEST(ValidateTest, NamesTheOffendingField) {
  auto s = injective_spec();
  s.task_classes = 1;
  EXPECT_NE(message_of([&] { validate(s); }).find("task_classes"),
            std::string::npos);
  s = injective_spec();
  s.sensitive_classes = {2, 1};
  EXPECT_NE(message_of([&] { validate(s); }).find("sensitive_classes[1]"),
            std::string::npos);
  s = injective_spec();
  s.nuisance_dim = -1;
  EXPECT_EQ(code_of([&] { validate(s); }), ErrorCode::kConfig);
  s = injective_spec();
  s.sensitive_classes = {5};
  EXPECT_NE(message_of([&] { validate(s); }).find("embed_dim_per_factor"),
            std::string::npos);
  s = injective_spec();
  s.noise_std = -0.1;
  EXPECT_NE(message_of([&] { validate(s); }).find("noise_std"),
            std::string::npos);
}

TEST(ValidateTest, ZeroSamplesIsPrecondition) {
  EXPECT_EQ(code_of([] { generate_dataset(injective_spec(), 0); }),
            ErrorCode::kPrecondition);
}

TEST(AblateTest, XDependsOnlyOnTaskAndNuisance) {
  auto s = injective_spec();
  s.nuisance_dim = 1;
  s.nuisance_kind = NuisanceKind::kDiscrete;
  s.nuisance_cardinality = 2;
  const auto ds = generate_dataset(s, 200);
  const auto ab = ablate_sensitive(ds, 0);
  ASSERT_EQ(ab.size(), ds.size());
  std::map<std::pair<int, int>, std::vector<float>> by_yr;
  for (std::size_t i = 0; i < ab.size(); ++i) {
    const auto& a = ab.samples[i];
    EXPECT_EQ(a.y, ds.samples[i].y);
    EXPECT_EQ(a.z, ds.samples[i].z);
    auto [it, inserted] = by_yr.emplace(std::pair{a.y, a.r_discrete[0]}, a.x);
    if (!inserted) EXPECT_EQ(it->second, a.x);
  }
  EXPECT_EQ(ab.ablated, std::vector<int>{0});
}

TEST(AblateTest, OutOfRangeAttributeIsRejected) {
  const auto ds = generate_dataset(injective_spec(), 8);
  EXPECT_EQ(code_of([&] { ablate_sensitive(ds, 1); }),
            ErrorCode::kPrecondition);
  EXPECT_EQ(code_of([&] { ablate_sensitive(ds, -1); }),
            ErrorCode::kPrecondition);
}

TEST(SwapTest, ExchangesLabelsAndIsAnInvolution) {
  const auto ds = generate_dataset(injective_spec(), 32);
  const auto sw = swap_task_and_sensitive(ds, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    EXPECT_EQ(sw.samples[i].y, ds.samples[i].z[0]);
    EXPECT_EQ(sw.samples[i].x, ds.samples[i].x);
  }
  EXPECT_EQ(sw.swapped_attribute, 0);
  EXPECT_EQ(swap_task_and_sensitive(sw, 0), ds);
}

class PersistenceTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ds_ = generate_dataset(injective_spec(), 8);
    save_dataset(ds_, dir_.path());
  }
  nlohmann::json meta() {
    std::ifstream in(dir_ / "meta.json");
    return nlohmann::json::parse(in);
  }
  void write_meta(const nlohmann::json& j) {
    std::ofstream(dir_ / "meta.json") << j.dump();
  }

  testing::TempDir dir_;
  FactorDataset ds_;
};

TEST_F(PersistenceTest, RoundTripIsFieldByFieldEqual) {
  EXPECT_EQ(load_dataset(dir_.path()), ds_);
}

TEST_F(PersistenceTest, RoundTripWithContinuousNuisanceAndMixing) {
  GeneratorSpec s = injective_spec();
  s.nuisance_dim = 2;
  s.nuisance_kind = NuisanceKind::kContinuousUniform;
  s.embed_dim_per_factor = 2;
  s.mixing = Mixing::kFixedOrthogonal;
  s.noise_std = 0.1;
  const auto ds = ablate_sensitive(generate_dataset(s, 50), 0);
  testing::TempDir other;
  save_dataset(ds, other.path());
  EXPECT_EQ(load_dataset(other.path()), ds);
}

TEST_F(PersistenceTest, BytesAreDeterministic) {
  testing::TempDir other;
  save_dataset(generate_dataset(injective_spec(), 8), other.path());
  EXPECT_EQ(read_file(dir_ / "data.bin"), read_file(other / "data.bin"));
  EXPECT_EQ(read_file(dir_ / "meta.json"), read_file(other / "meta.json"));
}

TEST_F(PersistenceTest, HeaderPromisingMoreRowsIsTruncation) {
  auto j = meta();
  j["n"] = 10;
  write_meta(j);
  EXPECT_EQ(code_of([&] { load_dataset(dir_.path()); }),
            ErrorCode::kTruncated);
}

TEST_F(PersistenceTest, UnknownVersionIsVersionError) {
  auto j = meta();
  j["format_version"] = 99;
  write_meta(j);
  EXPECT_EQ(code_of([&] { load_dataset(dir_.path()); }), ErrorCode::kVersion);
}

TEST_F(PersistenceTest, CorruptPayloadIsChecksumError) {
  auto bytes = read_file(dir_ / "data.bin");
  bytes[0] ^= 0x01;
  write_file(dir_ / "data.bin", bytes);
  EXPECT_EQ(code_of([&] { load_dataset(dir_.path()); }), ErrorCode::kChecksum);
}

TEST_F(PersistenceTest, GarbageHeaderIsMalformed) {
  std::ofstream(dir_ / "meta.json") << "{not json";
  EXPECT_EQ(code_of([&] { load_dataset(dir_.path()); }),
            ErrorCode::kMalformed);
}

}  // namespace
}  // namespace vunlearn::synthgen
