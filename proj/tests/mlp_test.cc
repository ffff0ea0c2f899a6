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

#include "vunlearn/nn/mlp.h"

#include <cmath>
#include <functional>
#include <random>

#include "gtest/gtest.h"
#include "vunlearn/common/error.h"

namespace vunlearn::nn {
namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

// Central-difference check of an analytic gradient with respect to `input`.
double max_input_grad_error(const std::function<double(const Matrix&)>& f,
                            const Matrix& input, const Matrix& analytic) {
  const double h = 1e-6;
  double worst = 0.0;
  for (Eigen::Index i = 0; i < input.size(); ++i) {
    Matrix plus = input, minus = input;
    plus.data()[i] += h;
    minus.data()[i] -= h;
    const double numeric = (f(plus) - f(minus)) / (2 * h);
    worst = std::max(worst, std::abs(numeric - analytic.data()[i]));
  }
  return worst;
}

TEST(MlpTest, SingleLayerCounts) {
  const std::size_t widths[] = {4, 3};
  const auto m = Mlp::make(widths, Activation::kTanh);
  EXPECT_EQ(m.param_count(), 15u);
  EXPECT_EQ(m.macs(), 12u);
}

TEST(MlpTest, HiddenLayerCounts) {
  const std::size_t widths[] = {4, 8, 3};
  const auto m = Mlp::make(widths, Activation::kRelu);
  EXPECT_EQ(m.param_count(), 67u);
  EXPECT_EQ(m.macs(), 56u);
  EXPECT_EQ(m.input_dim(), 4u);
  EXPECT_EQ(m.output_dim(), 3u);
}

TEST(MlpTest, EmptyIsIdentity) {
  Mlp m;
  const Matrix x = random_matrix(3, 2, 1);
  EXPECT_EQ(m.forward(x), x);
  EXPECT_EQ(m.param_count(), 0u);
}

TEST(MlpTest, ZeroOutputLayerGivesUniformSoftmax) {
  const std::size_t widths[] = {3, 5, 4};
  auto m = Mlp::make(widths, Activation::kTanh);
  std::mt19937_64 rng(2);
  m.init(rng, true);
  const Matrix p = softmax(m.forward(random_matrix(6, 3, 3)));
  EXPECT_TRUE(p.isApprox(Matrix::Constant(6, 4, 0.25), 1e-12));
}

TEST(MlpTest, BackwardMatchesFiniteDifferences) {
  for (Activation act :
       {Activation::kTanh, Activation::kRelu, Activation::kIdentity}) {
    const std::size_t widths[] = {3, 5, 2};
    auto m = Mlp::make(widths, act);
    std::mt19937_64 rng(4);
    m.init(rng);
    const Matrix x = random_matrix(7, 3, 5);
    const Matrix target = random_matrix(7, 2, 6);
    auto loss = [&](const Mlp& model) {
      return mean_squared_error(model.forward(x), target).loss;
    };
    Tape tape;
    const Matrix out = m.forward(x, tape);
    Gradients g = m.zero_gradients();
    m.backward(tape, mean_squared_error(out, target).grad, g);
    const auto analytic = flatten(g);
    const double h = 1e-6;
    for (std::size_t i = 0; i < analytic.size(); ++i) {
      Mlp plus = m, minus = m;
      plus.param(i) += h;
      minus.param(i) -= h;
      const double numeric = (loss(plus) - loss(minus)) / (2 * h);
      EXPECT_NEAR(numeric, analytic[i], 1e-6)
          << activation_name(act) << " param " << i;
    }
  }
}

TEST(MlpTest, InputGradientMatchesFiniteDifferences) {
  const std::size_t widths[] = {3, 4, 2};
  auto m = Mlp::make(widths, Activation::kTanh);
  std::mt19937_64 rng(8);
  m.init(rng);
  const Matrix x = random_matrix(5, 3, 9);
  const Matrix target = random_matrix(5, 2, 10);
  Tape tape;
  Gradients g = m.zero_gradients();
  const Matrix dx = m.backward(
      tape, mean_squared_error(m.forward(x, tape), target).grad, g);
  EXPECT_LT(max_input_grad_error(
                [&](const Matrix& in) {
                  return mean_squared_error(m.forward(in), target).loss;
                },
                x, dx),
            1e-7);
}

TEST(MlpTest, FlatRoundTrip) {
  const std::size_t widths[] = {2, 3, 2};
  auto m = Mlp::make(widths, Activation::kTanh);
  std::mt19937_64 rng(11);
  m.init(rng);
  const auto values = m.flat();
  Mlp copy = Mlp::make(widths, Activation::kTanh);
  copy.set_flat(values);
  EXPECT_EQ(copy.flat(), values);
  const auto rebuilt = Mlp::from_layer_spec(m.layer_spec());
  EXPECT_EQ(rebuilt.param_count(), m.param_count());
  EXPECT_EQ(rebuilt.layers()[0].activation, Activation::kTanh);
}

TEST(LossTest, CrossEntropyGradient) {
  const Matrix logits = random_matrix(6, 3, 12);
  const std::vector<int> labels{0, 1, 2, 2, 1, 0};
  const auto lg = softmax_cross_entropy(logits, labels);
  EXPECT_LT(max_input_grad_error(
                [&](const Matrix& l) {
                  return softmax_cross_entropy(l, labels).loss;
                },
                logits, lg.grad),
            1e-8);
}

TEST(LossTest, CrossEntropyOfUniformLogitsIsLogK) {
  const std::vector<int> labels{0, 3};
  EXPECT_NEAR(softmax_cross_entropy(Matrix::Zero(2, 4), labels).loss,
              std::log(4.0), 1e-12);
}

TEST(LossTest, UniformDivergenceIsZeroAtUniformAndPositiveElsewhere) {
  EXPECT_NEAR(uniform_divergence(Matrix::Constant(3, 5, 0.7)).loss, 0.0,
              1e-12);
  EXPECT_GT(uniform_divergence(random_matrix(3, 5, 13)).loss, 0.0);
}

TEST(LossTest, UniformDivergenceGradient) {
  const Matrix logits = random_matrix(4, 3, 14);
  const auto lg = uniform_divergence(logits);
  EXPECT_LT(max_input_grad_error(
                [](const Matrix& l) { return uniform_divergence(l).loss; },
                logits, lg.grad),
            1e-8);
}

TEST(LossTest, MeanSquaredErrorGradient) {
  const Matrix p = random_matrix(4, 3, 15);
  const Matrix t = random_matrix(4, 3, 16);
  EXPECT_LT(max_input_grad_error(
                [&](const Matrix& q) { return mean_squared_error(q, t).loss; },
                p, mean_squared_error(p, t).grad),
            1e-8);
}

TEST(LossTest, LabelEntropy) {
  const std::vector<int> labels{0, 1, 0, 1};
  EXPECT_NEAR(label_entropy(labels, 2), std::log(2.0), 1e-12);
  const std::vector<int> constant{1, 1, 1};
  EXPECT_EQ(label_entropy(constant, 3), 0.0);
}

TEST(AdamTest, MinimizesAQuadratic) {
  const std::size_t widths[] = {1, 1};
  auto m = Mlp::make(widths, Activation::kIdentity);
  Adam opt(0.05);
  const Matrix x = Matrix::Ones(1, 1);
  const Matrix target = Matrix::Constant(1, 1, 3.0);
  for (int i = 0; i < 2000; ++i) {
    Tape tape;
    Gradients g = m.zero_gradients();
    m.backward(tape, mean_squared_error(m.forward(x, tape), target).grad, g);
    opt.step(m, g);
  }
  EXPECT_NEAR(m.forward(x)(0, 0), 3.0, 1e-3);
}

TEST(HelpersTest, ArgmaxAccuracyGather) {
  Matrix m(3, 2);
  m << 0.1, 0.9, 0.8, 0.2, 0.5, 0.6;
  const auto am = argmax_rows(m);
  EXPECT_EQ(am, (std::vector<int>{1, 0, 1}));
  const std::vector<int> labels{1, 1, 1};
  EXPECT_NEAR(accuracy(am, labels), 2.0 / 3.0, 1e-12);
  const std::vector<std::size_t> rows{2, 0};
  EXPECT_EQ(gather_rows(m, rows).row(0), m.row(2));
  EXPECT_EQ(gather(labels, rows).size(), 2u);
}

TEST(HelpersTest, ActivationNames) {
  for (Activation a :
       {Activation::kIdentity, Activation::kTanh, Activation::kRelu}) {
    EXPECT_EQ(parse_activation(activation_name(a)), a);
  }
  EXPECT_THROW(parse_activation("swish"), Error);
}

}  // namespace
}  // namespace vunlearn::nn
