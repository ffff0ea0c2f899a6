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

#ifndef VUNLEARN_NN_MLP_H_
#define VUNLEARN_NN_MLP_H_

#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "json.hpp"

namespace vunlearn::nn {

using Matrix = Eigen::MatrixXd;  // rows are samples
using Vector = Eigen::VectorXd;

enum class Activation { kIdentity, kTanh, kRelu };

std::string activation_name(Activation a);
Activation parse_activation(const std::string& name);

struct Dense {
  Matrix weight;  // out x in
  Vector bias;    // out
  Activation activation = Activation::kIdentity;

  std::size_t in() const { return static_cast<std::size_t>(weight.cols()); }
  std::size_t out() const { return static_cast<std::size_t>(weight.rows()); }
};

struct DenseGrad {
  Matrix weight;
  Vector bias;
};

using Gradients = std::vector<DenseGrad>;

// Per-layer inputs and pre-activations recorded by a forward pass.
struct Tape {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
};

// Fully connected stack. An empty Mlp is the identity map with no
// parameters.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<Dense> layers) : layers_(std::move(layers)) {}

  // widths = {in, hidden..., out}. Hidden layers use `hidden`, the last
  // layer uses `output`. Parameters are zero until init().
  static Mlp make(std::span<const std::size_t> widths, Activation hidden,
                  Activation output = Activation::kIdentity);

  // Glorot-uniform weights, zero biases. With zero_output_layer the final
  // layer starts at exactly zero, which makes classifier training
  // equivariant under relabeling of classes.
  void init(std::mt19937_64& rng, bool zero_output_layer = false);

  Matrix forward(const Matrix& input) const;
  Matrix forward(const Matrix& input, Tape& tape) const;

  // Backpropagates dL/d(output). Writes parameter gradients into `grads`
  // (overwriting) and returns dL/d(input).
  Matrix backward(const Tape& tape, const Matrix& grad_output,
                  Gradients& grads) const;

  Gradients zero_gradients() const;

  std::size_t param_count() const;
  // Multiply-accumulates of one forward pass for a single sample.
  std::size_t macs() const;
  std::size_t input_dim() const;
  std::size_t output_dim() const;
  bool empty() const { return layers_.empty(); }

  const std::vector<Dense>& layers() const { return layers_; }
  std::vector<Dense>& layers() { return layers_; }

  // Flat order: per layer, weight row-major then bias.
  std::vector<double> flat() const;
  void set_flat(std::span<const double> values);
  double& param(std::size_t flat_index);

  void sgd_step(const Gradients& grads, double learning_rate);

  nlohmann::json layer_spec() const;
  static Mlp from_layer_spec(const nlohmann::json& spec);

 private:
  std::vector<Dense> layers_;
};

std::vector<double> flatten(const Gradients& grads);

// Adam over one Mlp.
class Adam {
 public:
  explicit Adam(double learning_rate, double beta1 = 0.9,
                double beta2 = 0.999, double epsilon = 1e-8)
      : lr_(learning_rate), b1_(beta1), b2_(beta2), eps_(epsilon) {}

  // lr_scale multiplies the configured learning rate for this step only.
  void step(Mlp& model, const Gradients& grads, double lr_scale = 1.0);

 private:
  double lr_, b1_, b2_, eps_;
  long t_ = 0;
  std::vector<double> m_, v_;
};

struct LossGrad {
  double loss = 0.0;
  Matrix grad;  // dL/d(input of loss)
};

// Mean softmax cross-entropy over the batch, in nats.
LossGrad softmax_cross_entropy(const Matrix& logits,
                               std::span<const int> labels);

// Mean cross-entropy of the softmax against the uniform distribution, minus
// ln K: the mean KL(uniform || softmax). Zero iff every row is uniform.
LossGrad uniform_divergence(const Matrix& logits);

// Mean over samples and coordinates of squared error.
LossGrad mean_squared_error(const Matrix& prediction, const Matrix& target);

Matrix softmax(const Matrix& logits);
std::vector<int> argmax_rows(const Matrix& m);
double accuracy(std::span<const int> predicted, std::span<const int> labels);

// Plug-in entropy of a label column, in nats.
double label_entropy(std::span<const int> labels, int classes);

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows);
std::vector<int> gather(std::span<const int> v,
                        std::span<const std::size_t> rows);

}  // namespace vunlearn::nn

#endif  // VUNLEARN_NN_MLP_H_
