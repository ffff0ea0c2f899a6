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

#include <algorithm>
#include <cmath>

#include "vunlearn/common/error.h"

namespace vunlearn::nn {
namespace {

Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::kIdentity: return z;
    case Activation::kTanh: return z.array().tanh().matrix();
    case Activation::kRelu: return z.cwiseMax(0.0);
  }
  return z;
}

// dL/dz given dL/da and the pre-activation z.
Matrix activate_backward(const Matrix& z, const Matrix& grad, Activation a) {
  switch (a) {
    case Activation::kIdentity: return grad;
    case Activation::kTanh: {
      const Matrix t = z.array().tanh().matrix();
      return (grad.array() * (1.0 - t.array().square())).matrix();
    }
    case Activation::kRelu:
      return (grad.array() * (z.array() > 0.0).cast<double>()).matrix();
  }
  return grad;
}

}  // namespace

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::kIdentity: return "identity";
    case Activation::kTanh: return "tanh";
    case Activation::kRelu: return "relu";
  }
  return "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "identity" || name == "linear") return Activation::kIdentity;
  if (name == "tanh") return Activation::kTanh;
  if (name == "relu") return Activation::kRelu;
  fail(ErrorCode::kConfig, "unknown activation '" + name + "'");
}

Mlp Mlp::make(std::span<const std::size_t> widths, Activation hidden,
              Activation output) {
  require(widths.size() >= 2, ErrorCode::kConfig,
          "an MLP needs at least input and output widths");
  std::vector<Dense> layers;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    require(widths[i] >= 1 && widths[i + 1] >= 1, ErrorCode::kConfig,
            "layer widths must be positive");
    Dense d;
    d.weight = Matrix::Zero(widths[i + 1], widths[i]);
    d.bias = Vector::Zero(widths[i + 1]);
    d.activation = (i + 2 == widths.size()) ? output : hidden;
    layers.push_back(std::move(d));
  }
  return Mlp(std::move(layers));
}

void Mlp::init(std::mt19937_64& rng, bool zero_output_layer) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    Dense& d = layers_[l];
    d.bias.setZero();
    if (zero_output_layer && l + 1 == layers_.size()) {
      d.weight.setZero();
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(d.in() + d.out()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index i = 0; i < d.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < d.weight.cols(); ++j) d.weight(i, j) = u(rng);
    }
  }
}

Matrix Mlp::forward(const Matrix& input) const {
  Matrix a = input;
  for (const Dense& d : layers_) {
    require(static_cast<std::size_t>(a.cols()) == d.in(),
            ErrorCode::kDimensionMismatch,
            "layer expects " + std::to_string(d.in()) + " inputs, got " +
                std::to_string(a.cols()));
    Matrix z = a * d.weight.transpose();
    z.rowwise() += d.bias.transpose();
    a = activate(z, d.activation);
  }
  return a;
}

Matrix Mlp::forward(const Matrix& input, Tape& tape) const {
  tape.inputs.clear();
  tape.pre.clear();
  Matrix a = input;
  for (const Dense& d : layers_) {
    require(static_cast<std::size_t>(a.cols()) == d.in(),
            ErrorCode::kDimensionMismatch,
            "layer expects " + std::to_string(d.in()) + " inputs, got " +
                std::to_string(a.cols()));
    tape.inputs.push_back(a);
    Matrix z = a * d.weight.transpose();
    z.rowwise() += d.bias.transpose();
    a = activate(z, d.activation);
    tape.pre.push_back(std::move(z));
  }
  return a;
}

Matrix Mlp::backward(const Tape& tape, const Matrix& grad_output,
                     Gradients& grads) const {
  grads.resize(layers_.size());
  Matrix g = grad_output;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const Dense& d = layers_[l];
    const Matrix dz = activate_backward(tape.pre[l], g, d.activation);
    grads[l].weight = dz.transpose() * tape.inputs[l];
    grads[l].bias = dz.colwise().sum().transpose();
    g = dz * d.weight;
  }
  return g;
}

Gradients Mlp::zero_gradients() const {
  Gradients g(layers_.size());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    g[l].weight = Matrix::Zero(layers_[l].weight.rows(), layers_[l].weight.cols());
    g[l].bias = Vector::Zero(layers_[l].bias.size());
  }
  return g;
}

std::size_t Mlp::param_count() const {
  std::size_t n = 0;
  for (const Dense& d : layers_) n += d.in() * d.out() + d.out();
  return n;
}

std::size_t Mlp::macs() const {
  std::size_t n = 0;
  for (const Dense& d : layers_) n += d.in() * d.out();
  return n;
}

std::size_t Mlp::input_dim() const {
  return layers_.empty() ? 0 : layers_.front().in();
}

std::size_t Mlp::output_dim() const {
  return layers_.empty() ? 0 : layers_.back().out();
}

std::vector<double> Mlp::flat() const {
  std::vector<double> out;
  out.reserve(param_count());
  for (const Dense& d : layers_) {
    for (Eigen::Index i = 0; i < d.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < d.weight.cols(); ++j) {
        out.push_back(d.weight(i, j));
      }
    }
    for (Eigen::Index i = 0; i < d.bias.size(); ++i) out.push_back(d.bias(i));
  }
  return out;
}

void Mlp::set_flat(std::span<const double> values) {
  require(values.size() == param_count(), ErrorCode::kDimensionMismatch,
          "parameter vector has " + std::to_string(values.size()) +
              " entries, model has " + std::to_string(param_count()));
  std::size_t k = 0;
  for (Dense& d : layers_) {
    for (Eigen::Index i = 0; i < d.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < d.weight.cols(); ++j) {
        d.weight(i, j) = values[k++];
      }
    }
    for (Eigen::Index i = 0; i < d.bias.size(); ++i) d.bias(i) = values[k++];
  }
}

double& Mlp::param(std::size_t flat_index) {
  for (Dense& d : layers_) {
    const std::size_t w = d.in() * d.out();
    if (flat_index < w) {
      return d.weight(static_cast<Eigen::Index>(flat_index / d.in()),
                      static_cast<Eigen::Index>(flat_index % d.in()));
    }
    flat_index -= w;
    if (flat_index < d.out()) {
      return d.bias(static_cast<Eigen::Index>(flat_index));
    }
    flat_index -= d.out();
  }
  fail(ErrorCode::kPrecondition, "parameter index out of range");
}

void Mlp::sgd_step(const Gradients& grads, double learning_rate) {
  require(grads.size() == layers_.size(), ErrorCode::kDimensionMismatch,
          "gradient/layer count mismatch");
  if (learning_rate == 0.0) return;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layers_[l].weight -= learning_rate * grads[l].weight;
    layers_[l].bias -= learning_rate * grads[l].bias;
  }
}

nlohmann::json Mlp::layer_spec() const {
  nlohmann::json spec = nlohmann::json::array();
  for (const Dense& d : layers_) {
    spec.push_back({{"in", d.in()},
                    {"out", d.out()},
                    {"activation", activation_name(d.activation)}});
  }
  return spec;
}

Mlp Mlp::from_layer_spec(const nlohmann::json& spec) {
  std::vector<Dense> layers;
  try {
    for (const auto& entry : spec) {
      const std::size_t in = entry.at("in").get<std::size_t>();
      const std::size_t out = entry.at("out").get<std::size_t>();
      require(in >= 1 && out >= 1, ErrorCode::kMalformed,
              "layer widths must be positive");
      if (!layers.empty()) {
        require(layers.back().out() == in, ErrorCode::kMalformed,
                "inconsistent layer_spec: widths do not chain");
      }
      Dense d;
      d.weight = Matrix::Zero(out, in);
      d.bias = Vector::Zero(out);
      d.activation = parse_activation(entry.at("activation").get<std::string>());
      layers.push_back(std::move(d));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("layer_spec: ") + e.what());
  }
  return Mlp(std::move(layers));
}

std::vector<double> flatten(const Gradients& grads) {
  std::vector<double> out;
  for (const DenseGrad& g : grads) {
    for (Eigen::Index i = 0; i < g.weight.rows(); ++i) {
      for (Eigen::Index j = 0; j < g.weight.cols(); ++j) {
        out.push_back(g.weight(i, j));
      }
    }
    for (Eigen::Index i = 0; i < g.bias.size(); ++i) out.push_back(g.bias(i));
  }
  return out;
}

void Adam::step(Mlp& model, const Gradients& grads, double lr_scale) {
  const std::vector<double> g = flatten(grads);
  std::vector<double> p = model.flat();
  if (m_.empty()) {
    m_.assign(p.size(), 0.0);
    v_.assign(p.size(), 0.0);
  }
  require(g.size() == p.size() && m_.size() == p.size(),
          ErrorCode::kDimensionMismatch, "Adam state does not match model");
  ++t_;
  const double c1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < p.size(); ++i) {
    m_[i] = b1_ * m_[i] + (1.0 - b1_) * g[i];
    v_[i] = b2_ * v_[i] + (1.0 - b2_) * g[i] * g[i];
    p[i] -= lr_scale * lr_ * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + eps_);
  }
  model.set_flat(p);
}

Matrix softmax(const Matrix& logits) {
  Matrix p = logits;
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const double m = p.row(i).maxCoeff();
    p.row(i) = (p.row(i).array() - m).exp().matrix();
    p.row(i) /= p.row(i).sum();
  }
  return p;
}

LossGrad softmax_cross_entropy(const Matrix& logits,
                               std::span<const int> labels) {
  require(static_cast<std::size_t>(logits.rows()) == labels.size(),
          ErrorCode::kDimensionMismatch, "logits/labels row mismatch");
  require(logits.rows() > 0, ErrorCode::kPrecondition, "empty batch");
  LossGrad out;
  out.grad = softmax(logits);
  const double n = static_cast<double>(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[i];
    require(y >= 0 && y < logits.cols(), ErrorCode::kPrecondition,
            "label " + std::to_string(y) + " outside [0, " +
                std::to_string(logits.cols()) + ")");
    const double m = logits.row(i).maxCoeff();
    const double lse =
        m + std::log((logits.row(i).array() - m).exp().sum());
    out.loss += lse - logits(i, y);
    out.grad(i, y) -= 1.0;
  }
  out.loss /= n;
  out.grad /= n;
  return out;
}

LossGrad uniform_divergence(const Matrix& logits) {
  require(logits.rows() > 0 && logits.cols() > 0, ErrorCode::kPrecondition,
          "empty batch");
  const double k = static_cast<double>(logits.cols());
  const double n = static_cast<double>(logits.rows());
  LossGrad out;
  out.grad = softmax(logits);
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse =
        m + std::log((logits.row(i).array() - m).exp().sum());
    out.loss += lse - logits.row(i).mean();
  }
  out.loss = out.loss / n - std::log(k);
  out.grad.array() -= 1.0 / k;
  out.grad /= n;
  return out;
}

LossGrad mean_squared_error(const Matrix& prediction, const Matrix& target) {
  require(prediction.rows() == target.rows() &&
              prediction.cols() == target.cols(),
          ErrorCode::kDimensionMismatch, "prediction/target shape mismatch");
  require(prediction.size() > 0, ErrorCode::kPrecondition, "empty batch");
  const Matrix diff = prediction - target;
  const double count = static_cast<double>(diff.size());
  return {diff.squaredNorm() / count, (2.0 / count) * diff};
}

std::vector<int> argmax_rows(const Matrix& m) {
  std::vector<int> out(m.rows());
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Eigen::Index best;
    m.row(i).maxCoeff(&best);
    out[i] = static_cast<int>(best);
  }
  return out;
}

double accuracy(std::span<const int> predicted, std::span<const int> labels) {
  require(predicted.size() == labels.size() && !labels.empty(),
          ErrorCode::kPrecondition, "accuracy needs equal, non-empty inputs");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    hit += predicted[i] == labels[i];
  }
  return static_cast<double>(hit) / static_cast<double>(labels.size());
}

double label_entropy(std::span<const int> labels, int classes) {
  if (labels.empty()) return 0.0;
  std::vector<double> counts(classes, 0.0);
  for (int y : labels) {
    require(y >= 0 && y < classes, ErrorCode::kPrecondition,
            "label out of range");
    counts[y] += 1.0;
  }
  const double n = static_cast<double>(labels.size());
  double h = 0.0;
  for (double c : counts) {
    if (c > 0) h -= (c / n) * std::log(c / n);
  }
  return h;
}

Matrix gather_rows(const Matrix& m, std::span<const std::size_t> rows) {
  Matrix out(rows.size(), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) =
        m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

std::vector<int> gather(std::span<const int> v,
                        std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(v[r]);
  return out;
}

}  // namespace vunlearn::nn
