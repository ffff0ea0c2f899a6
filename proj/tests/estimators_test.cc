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

#include "vunlearn/estimators/estimators.h"

#include <cmath>
#include <functional>
#include <random>

#include "discrete_sampling.h"
#include "gtest/gtest.h"
#include "temp_dir.h"
#include "vunlearn/common/error.h"
#include "vunlearn/oracle/discrete.h"
#include "vunlearn/oracle/factor_system.h"

namespace vunlearn::estimators {
namespace {

using nn::Matrix;

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kIo;
}

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

FitConfig linear_config() {
  FitConfig c;
  c.hidden_layers = 0;
  c.steps = 1500;
  c.learning_rate = 5e-2;
  c.batch_size = 0;
  return c;
}

std::vector<int> bits(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng() & 1);
  return y;
}

Matrix one_hot(const std::vector<int>& labels, int classes) {
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    m(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return m;
}

TEST(ReconstructionTest, IdentityFeaturesReconstructExactly) {
  const Matrix x = gaussian(400, 3, 1);
  const auto e = fit_reconstruction(x, x, linear_config());
  EXPECT_TRUE(e.fitted);
  EXPECT_LT(e.fitted_error, 1e-6);
  EXPECT_NEAR(estimate_info_x(e), 0.0, 1e-6);
}

TEST(ReconstructionTest, IndependentFeaturesGiveTargetVariance) {
  const Matrix h = gaussian(2000, 2, 2);
  const Matrix x = gaussian(2000, 2, 3);
  auto config = linear_config();
  const auto e = fit_reconstruction(h, x, config);
  const auto hold = holdout_split(2000, config.holdout_fraction, config.seed);
  double var = 0.0;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const Matrix held = nn::gather_rows(x, hold.held);
    const double mean = held.col(c).mean();
    var += (held.col(c).array() - mean).square().mean();
  }
  var /= static_cast<double>(x.cols());
  EXPECT_NEAR(e.fitted_error, var, 0.05 * var);
}

TEST(ReconstructionTest, FixedSeedIsDeterministic) {
  const Matrix h = gaussian(300, 2, 4);
  const Matrix x = gaussian(300, 3, 5);
  FitConfig c;
  c.steps = 200;
  EXPECT_EQ(fit_reconstruction(h, x, c).fitted_error,
            fit_reconstruction(h, x, c).fitted_error);
}

TEST(ReconstructionTest, ScoreIsNegatedError) {
  ReconstructionEstimator e;
  e.fitted = true;
  e.fitted_error = 0.5;
  EXPECT_EQ(estimate_info_x(e), -0.5);
}

TEST(ReconstructionTest, UnfittedEstimatorIsRejected) {
  EXPECT_EQ(code_of([] { estimate_info_x(ReconstructionEstimator{}); }),
            ErrorCode::kNotFitted);
}

TEST(ReconstructionTest, NoiseNeverIncreasesScore) {
  const Matrix x = gaussian(1000, 2, 6);
  const Matrix noise = gaussian(1000, 2, 7);
  double previous = 1.0;
  for (double level : {0.0, 0.25, 0.5, 1.0, 2.0}) {
    const auto e = fit_reconstruction(x + level * noise, x, linear_config());
    const double score = estimate_info_x(e);
    EXPECT_LE(score, previous + 1e-9) << "noise " << level;
    previous = score;
  }
}

TEST(ReconstructionTest, InputErrors) {
  EXPECT_EQ(code_of([] {
              fit_reconstruction(Matrix(0, 2), Matrix(0, 2), FitConfig{});
            }),
            ErrorCode::kPrecondition);
  EXPECT_EQ(code_of([] {
              fit_reconstruction(Matrix::Zero(3, 2), Matrix::Zero(4, 2),
                                 FitConfig{});
            }),
            ErrorCode::kDimensionMismatch);
}

TEST(ClassifierTest, SeparableToyGivesLogTwo) {
  const auto y = bits(2000, 8);
  const auto e = fit_classifier(one_hot(y, 2), y, 2, FitConfig{});
  EXPECT_EQ(e.status, EstimateStatus::kOk);
  EXPECT_NEAR(e.estimate, std::log(2.0), 0.05);
  EXPECT_GE(e.fitted_cross_entropy, 0.0);
  EXPECT_LE(e.estimate, e.label_entropy);
}

TEST(ClassifierTest, IndependentToyGivesZero) {
  const auto y = bits(2000, 9);
  const auto e = fit_classifier(gaussian(2000, 2, 10), y, 2, FitConfig{});
  EXPECT_NEAR(e.estimate, 0.0, 0.05);
}

TEST(ClassifierTest, NoisyChannelToyStaysBelowOracle) {
  const oracle::DiscreteJoint joint({{"h", 2}, {"y", 2}},
                                    {0.4, 0.1, 0.1, 0.4});
  const double exact = oracle::mutual_information(joint, {"h"}, {"y"});
  EXPECT_NEAR(exact, 0.1928, 1e-4);
  std::mt19937_64 rng(11);
  const auto s = testing::sample_pairs(joint, "h", "y", 4000, rng);
  const auto e = fit_classifier(s.features, s.labels, 2, FitConfig{});
  EXPECT_LE(e.estimate, exact + 0.05);
  EXPECT_GT(e.estimate, exact - 0.05);
}

TEST(ClassifierTest, LowerBoundOnRandomFixtures) {
  std::mt19937_64 rng(12);
  oracle::RandomSystemOptions opts;
  for (int k = 0; k < 20; ++k) {
    const auto sys = oracle::random_factor_system(rng, opts);
    const auto joint = oracle::compose_markov_chain(sys);
    for (const std::string label : {"y", "z0"}) {
      const double exact = oracle::mutual_information(joint, {"h"}, {label});
      const auto s = testing::sample_pairs(joint, "h", label, 3000, rng);
      FitConfig c;
      c.steps = 600;
      c.seed = static_cast<std::uint64_t>(k);
      const auto e = fit_classifier(s.features, s.labels, s.classes, c);
      EXPECT_LE(e.estimate, exact + 0.05) << "fixture " << k << " " << label;
    }
  }
}

TEST(ClassifierTest, RelabelingChangesNothing) {
  const Matrix h = gaussian(600, 3, 13);
  std::vector<int> y(600), permuted(600);
  const int perm[] = {2, 0, 1};
  for (int i = 0; i < 600; ++i) {
    y[i] = h(i, 0) > 0.5 ? 0 : (h(i, 1) > 0 ? 1 : 2);
    permuted[i] = perm[y[i]];
  }
  FitConfig c;
  c.steps = 300;
  const auto a = fit_classifier(h, y, 3, c);
  const auto b = fit_classifier(h, permuted, 3, c);
  EXPECT_NEAR(a.estimate, b.estimate, 1e-6);
  EXPECT_NEAR(a.fitted_cross_entropy, b.fitted_cross_entropy, 1e-6);
}

TEST(ClassifierTest, ShufflingLabelsDegradesMonotonically) {
  const std::size_t n = 2000;
  const auto y = bits(n, 14);
  const Matrix h = one_hot(y, 2) + 0.3 * gaussian(n, 2, 15);
  double previous = 10.0;
  for (double p : {0.0, 0.25, 0.5, 1.0}) {
    // Replace the first p*n rows of h by rows drawn from a shuffled order.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(16);
    const auto cut = static_cast<std::size_t>(p * static_cast<double>(n));
    std::shuffle(order.begin(), order.begin() + cut, rng);
    Matrix corrupted = nn::gather_rows(h, order);
    const auto e = fit_classifier(corrupted, y, 2, FitConfig{});
    EXPECT_LE(e.estimate, previous + 0.01) << "p " << p;
    previous = e.estimate;
  }
  EXPECT_NEAR(previous, 0.0, 0.05);
}

TEST(ClassifierTest, SingleClassForcesZero) {
  const std::vector<int> y(50, 1);
  const auto e = fit_classifier(gaussian(50, 2, 17), y, 2, FitConfig{});
  EXPECT_EQ(e.status, EstimateStatus::kSingleClass);
  EXPECT_EQ(e.estimate, 0.0);
}

TEST(ClassifierTest, InputErrors) {
  const std::vector<int> y{0, 1, 0};
  EXPECT_EQ(code_of([&] { fit_classifier(Matrix::Zero(2, 2), y, 2, {}); }),
            ErrorCode::kDimensionMismatch);
  const std::vector<int> bad{0, 3, 0};
  EXPECT_EQ(code_of([&] { fit_classifier(Matrix::Zero(3, 2), bad, 2, {}); }),
            ErrorCode::kPrecondition);
}

TEST(HoldoutTest, EightyTwentyAndDeterministic) {
  const auto a = holdout_split(100, 0.2, 3);
  EXPECT_EQ(a.held.size(), 20u);
  EXPECT_EQ(a.fit.size(), 80u);
  EXPECT_EQ(a.fit, holdout_split(100, 0.2, 3).fit);
}

TEST(PersistenceTest, EstimatorsRoundTrip) {
  testing::TempDir dir;
  FitConfig c;
  c.steps = 50;
  const auto y = bits(200, 18);
  const Matrix h = gaussian(200, 2, 19);
  const auto cls = fit_classifier(h, y, 2, c);
  save_estimator(cls, dir / "cls.bin");
  const auto cls2 = load_classifier(dir / "cls.bin");
  EXPECT_EQ(cls2.classes, 2);
  EXPECT_EQ(cls2.fitted, true);
  EXPECT_NEAR(cls2.estimate, cls.estimate, 1e-6);
  EXPECT_TRUE(cls2.classifier.forward(h).isApprox(cls.classifier.forward(h),
                                                  1e-5));

  const auto rec = fit_reconstruction(h, h, c);
  save_estimator(rec, dir / "rec.bin");
  const auto rec2 = load_reconstruction(dir / "rec.bin");
  EXPECT_NEAR(rec2.fitted_error, rec.fitted_error, 1e-6);
  EXPECT_EQ(code_of([&] { load_reconstruction(dir / "cls.bin"); }),
            ErrorCode::kMalformed);
}

}  // namespace
}  // namespace vunlearn::estimators
