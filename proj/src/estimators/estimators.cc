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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "vunlearn/common/container.h"
#include "vunlearn/common/error.h"

namespace vunlearn::estimators {
namespace {

constexpr std::uint64_t kBatchStream = 0x6261746368ULL;
constexpr std::uint64_t kHoldoutStream = 0x686f6c64ULL;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

// Runs config.steps optimizer steps. `grads_for(rows, grads)` fills the
// gradient of the batch loss over `rows`.
template <typename GradFn>
void train_loop(nn::Mlp& model, std::size_t n, const FitConfig& config,
                GradFn&& grads_for) {
  require(config.steps >= 0, ErrorCode::kConfig, "steps must be >= 0");
  require(config.learning_rate >= 0.0, ErrorCode::kConfig,
          "learning_rate must be >= 0");
  auto rng = stream(config.seed, kBatchStream);
  const std::size_t batch =
      config.batch_size == 0 ? n : std::min(config.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::size_t cursor = n;  // forces a shuffle on the first step
  nn::Adam adam(config.learning_rate);
  nn::Gradients grads;
  std::vector<std::size_t> rows(batch);
  for (int step = 0; step < config.steps; ++step) {
    if (batch == n) {
      std::iota(rows.begin(), rows.end(), std::size_t{0});
    } else {
      for (std::size_t i = 0; i < batch; ++i) {
        if (cursor >= n) {
          std::shuffle(order.begin(), order.end(), rng);
          cursor = 0;
        }
        rows[i] = order[cursor++];
      }
    }
    grads_for(rows, grads);
    const double scale =
        config.anneal ? 1.0 - static_cast<double>(step) / config.steps : 1.0;
    if (config.optimizer == Optimizer::kSgd) {
      model.sgd_step(grads, config.learning_rate * scale);
    } else {
      adam.step(model, grads, scale);
    }
  }
}

}  // namespace

std::size_t auto_width(std::size_t feature_dim) {
  return std::max<std::size_t>(32, 4 * feature_dim);
}

std::vector<std::size_t> head_widths(const FitConfig& config, std::size_t in,
                                     std::size_t out) {
  require(config.hidden_layers >= 0, ErrorCode::kConfig,
          "hidden_layers must be >= 0");
  const std::size_t width =
      config.hidden_width == 0 ? auto_width(in) : config.hidden_width;
  std::vector<std::size_t> widths{in};
  for (int i = 0; i < config.hidden_layers; ++i) widths.push_back(width);
  widths.push_back(out);
  return widths;
}

nn::Mlp train_classifier(const nn::Matrix& features,
                         std::span<const int> labels, int classes,
                         const FitConfig& config) {
  require(features.rows() > 0, ErrorCode::kPrecondition, "empty input");
  require(static_cast<std::size_t>(features.rows()) == labels.size(),
          ErrorCode::kDimensionMismatch, "features/labels length mismatch");
  require(classes >= 2, ErrorCode::kPrecondition, "classes must be >= 2");
  for (int y : labels) {
    require(y >= 0 && y < classes, ErrorCode::kPrecondition,
            "label outside declared cardinality");
  }
  nn::Mlp model =
      nn::Mlp::make(head_widths(config, features.cols(), classes),
                    config.activation);
  std::mt19937_64 init(config.seed);
  model.init(init, /*zero_output_layer=*/true);
  train_loop(model, labels.size(), config,
             [&](const std::vector<std::size_t>& rows, nn::Gradients& grads) {
               const nn::Matrix xb = nn::gather_rows(features, rows);
               const std::vector<int> yb = nn::gather(labels, rows);
               nn::Tape tape;
               const nn::Matrix logits = model.forward(xb, tape);
               const auto ce = nn::softmax_cross_entropy(logits, yb);
               model.backward(tape, ce.grad, grads);
             });
  return model;
}

nn::Mlp train_regressor(const nn::Matrix& features, const nn::Matrix& targets,
                        const FitConfig& config) {
  require(features.rows() > 0, ErrorCode::kPrecondition, "empty input");
  require(features.rows() == targets.rows(), ErrorCode::kDimensionMismatch,
          "features/targets length mismatch");
  nn::Mlp model = nn::Mlp::make(
      head_widths(config, features.cols(), targets.cols()), config.activation);
  std::mt19937_64 init(config.seed);
  model.init(init);
  train_loop(model, features.rows(), config,
             [&](const std::vector<std::size_t>& rows, nn::Gradients& grads) {
               const nn::Matrix xb = nn::gather_rows(features, rows);
               const nn::Matrix tb = nn::gather_rows(targets, rows);
               nn::Tape tape;
               const nn::Matrix pred = model.forward(xb, tape);
               const auto mse = nn::mean_squared_error(pred, tb);
               model.backward(tape, mse.grad, grads);
             });
  return model;
}

Holdout holdout_split(std::size_t n, double fraction, std::uint64_t seed) {
  require(n >= 2, ErrorCode::kPrecondition,
          "held-out estimation needs at least two samples");
  require(fraction > 0.0 && fraction < 1.0, ErrorCode::kConfig,
          "holdout_fraction must be in (0, 1)");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = stream(seed, kHoldoutStream);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t held = static_cast<std::size_t>(std::llround(fraction * n));
  held = std::clamp<std::size_t>(held, 1, n - 1);
  Holdout h;
  h.held.assign(order.begin(), order.begin() + held);
  h.fit.assign(order.begin() + held, order.end());
  std::sort(h.held.begin(), h.held.end());
  std::sort(h.fit.begin(), h.fit.end());
  return h;
}

ReconstructionEstimator fit_reconstruction(const nn::Matrix& features,
                                           const nn::Matrix& targets,
                                           const FitConfig& config) {
  require(features.rows() > 0 && targets.rows() > 0, ErrorCode::kPrecondition,
          "empty input");
  require(features.rows() == targets.rows(), ErrorCode::kDimensionMismatch,
          "features and targets differ in length");
  const Holdout split =
      holdout_split(features.rows(), config.holdout_fraction, config.seed);
  ReconstructionEstimator e;
  e.decoder = train_regressor(nn::gather_rows(features, split.fit),
                              nn::gather_rows(targets, split.fit), config);
  const nn::Matrix pred = e.decoder.forward(nn::gather_rows(features, split.held));
  e.fitted_error =
      nn::mean_squared_error(pred, nn::gather_rows(targets, split.held)).loss;
  e.fitted = true;
  return e;
}

double estimate_info_x(const ReconstructionEstimator& estimator) {
  require(estimator.fitted, ErrorCode::kNotFitted,
          "reconstruction estimator is not fitted");
  return -estimator.fitted_error;
}

ClassifierEstimator fit_classifier(const nn::Matrix& features,
                                   std::span<const int> labels, int classes,
                                   const FitConfig& config) {
  require(features.rows() > 0, ErrorCode::kPrecondition, "empty input");
  require(static_cast<std::size_t>(features.rows()) == labels.size(),
          ErrorCode::kDimensionMismatch, "features and labels differ in length");
  require(classes >= 1, ErrorCode::kPrecondition, "classes must be >= 1");
  ClassifierEstimator e;
  e.classes = classes;
  const bool single_class =
      std::adjacent_find(labels.begin(), labels.end(), std::not_equal_to<>()) ==
      labels.end();
  if (single_class || classes < 2) {
    e.status = EstimateStatus::kSingleClass;
    e.classifier = nn::Mlp::make(
        head_widths(config, features.cols(), std::max(classes, 1)),
        config.activation);
    e.fitted = true;
    return e;
  }
  const Holdout split =
      holdout_split(labels.size(), config.holdout_fraction, config.seed);
  const std::vector<int> fit_labels = nn::gather(labels, split.fit);
  const std::vector<int> held_labels = nn::gather(labels, split.held);
  e.classifier = train_classifier(nn::gather_rows(features, split.fit),
                                  fit_labels, classes, config);
  const nn::Matrix logits =
      e.classifier.forward(nn::gather_rows(features, split.held));
  e.fitted_cross_entropy = nn::softmax_cross_entropy(logits, held_labels).loss;
  e.label_entropy = nn::label_entropy(held_labels, classes);
  e.estimate = e.label_entropy - e.fitted_cross_entropy;
  e.fitted = true;
  return e;
}

namespace {

std::vector<float> to_f32(const std::vector<double>& v) {
  return std::vector<float>(v.begin(), v.end());
}

void restore(nn::Mlp& model, const std::vector<float>& params) {
  model.set_flat(std::vector<double>(params.begin(), params.end()));
}

}  // namespace

void save_estimator(const ReconstructionEstimator& e,
                    const std::filesystem::path& path) {
  ParameterContainer c;
  c.header = {{"kind", "reconstruction"},
              {"layer_spec", e.decoder.layer_spec()},
              {"fitted", e.fitted},
              {"fitted_error", e.fitted_error}};
  c.params = to_f32(e.decoder.flat());
  write_container(path, c);
}

void save_estimator(const ClassifierEstimator& e,
                    const std::filesystem::path& path) {
  ParameterContainer c;
  c.header = {{"kind", "classifier"},
              {"layer_spec", e.classifier.layer_spec()},
              {"fitted", e.fitted},
              {"classes", e.classes},
              {"label_entropy", e.label_entropy},
              {"fitted_cross_entropy", e.fitted_cross_entropy},
              {"estimate", e.estimate},
              {"status", e.status == EstimateStatus::kOk ? "ok" : "single_class"}};
  c.params = to_f32(e.classifier.flat());
  write_container(path, c);
}

ReconstructionEstimator load_reconstruction(const std::filesystem::path& path) {
  const ParameterContainer c = read_container(path);
  try {
    require(c.header.at("kind") == "reconstruction", ErrorCode::kMalformed,
            "container does not hold a reconstruction estimator");
    ReconstructionEstimator e;
    e.decoder = nn::Mlp::from_layer_spec(c.header.at("layer_spec"));
    restore(e.decoder, c.params);
    e.fitted = c.header.at("fitted").get<bool>();
    e.fitted_error = c.header.at("fitted_error").get<double>();
    return e;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::kMalformed, std::string("estimator header: ") + ex.what());
  }
}

ClassifierEstimator load_classifier(const std::filesystem::path& path) {
  const ParameterContainer c = read_container(path);
  try {
    require(c.header.at("kind") == "classifier", ErrorCode::kMalformed,
            "container does not hold a classifier estimator");
    ClassifierEstimator e;
    e.classifier = nn::Mlp::from_layer_spec(c.header.at("layer_spec"));
    restore(e.classifier, c.params);
    e.fitted = c.header.at("fitted").get<bool>();
    e.classes = c.header.at("classes").get<int>();
    e.label_entropy = c.header.at("label_entropy").get<double>();
    e.fitted_cross_entropy = c.header.at("fitted_cross_entropy").get<double>();
    e.estimate = c.header.at("estimate").get<double>();
    e.status = c.header.at("status") == "ok" ? EstimateStatus::kOk
                                             : EstimateStatus::kSingleClass;
    return e;
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorCode::kMalformed, std::string("estimator header: ") + ex.what());
  }
}

}  // namespace vunlearn::estimators
