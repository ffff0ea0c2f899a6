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

#ifndef VUNLEARN_ESTIMATORS_ESTIMATORS_H_
#define VUNLEARN_ESTIMATORS_ESTIMATORS_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "vunlearn/nn/mlp.h"

namespace vunlearn::estimators {

enum class Optimizer { kAdam, kSgd };

struct FitConfig {
  // Two hidden layers of width max(32, 4 * dim(h)) unless overridden.
  int hidden_layers = 2;
  std::size_t hidden_width = 0;  // 0 = automatic
  nn::Activation activation = nn::Activation::kTanh;
  int steps = 1500;
  std::size_t batch_size = 128;  // 0 = full batch
  double learning_rate = 1e-2;
  // Linearly anneal the learning rate to zero over `steps`.
  bool anneal = true;
  Optimizer optimizer = Optimizer::kAdam;
  std::uint64_t seed = 0;
  double holdout_fraction = 0.2;
};

std::size_t auto_width(std::size_t feature_dim);

// Widths {in, hidden..., out} for a config.
std::vector<std::size_t> head_widths(const FitConfig& config,
                                     std::size_t in, std::size_t out);

// Trains a classifier head on all given rows. The output layer starts at
// zero so the result is equivariant under class relabeling.
nn::Mlp train_classifier(const nn::Matrix& features,
                         std::span<const int> labels, int classes,
                         const FitConfig& config);

nn::Mlp train_regressor(const nn::Matrix& features, const nn::Matrix& targets,
                        const FitConfig& config);

// Deterministic (train, held-out) partition of n rows.
struct Holdout {
  std::vector<std::size_t> fit;
  std::vector<std::size_t> held;
};
Holdout holdout_split(std::size_t n, double fraction, std::uint64_t seed);

// Decoder h -> x whose held-out squared error proxies I(h, x).
struct ReconstructionEstimator {
  nn::Mlp decoder;
  double fitted_error = 0.0;  // held-out mean squared error per coordinate
  bool fitted = false;
};

ReconstructionEstimator fit_reconstruction(const nn::Matrix& features,
                                           const nn::Matrix& targets,
                                           const FitConfig& config);

// Monotone proxy for I(h, x): the negated fitted error. Not calibrated.
double estimate_info_x(const ReconstructionEstimator& estimator);

enum class EstimateStatus { kOk, kSingleClass };

// Classifier q(label | h) giving the variational lower bound
// I(h, label) >= H(label) - E[-log q(label | h)].
struct ClassifierEstimator {
  nn::Mlp classifier;
  int classes = 0;
  double label_entropy = 0.0;         // plug-in, held-out rows, nats
  double fitted_cross_entropy = 0.0;  // held-out, nats
  double estimate = 0.0;              // label_entropy - fitted_cross_entropy
  EstimateStatus status = EstimateStatus::kOk;
  bool fitted = false;
};

ClassifierEstimator fit_classifier(const nn::Matrix& features,
                                   std::span<const int> labels, int classes,
                                   const FitConfig& config);

// Checkpoints: versioned parameter container with a JSON shape header.
void save_estimator(const ReconstructionEstimator& e,
                    const std::filesystem::path& path);
void save_estimator(const ClassifierEstimator& e,
                    const std::filesystem::path& path);
ReconstructionEstimator load_reconstruction(const std::filesystem::path& path);
ClassifierEstimator load_classifier(const std::filesystem::path& path);

}  // namespace vunlearn::estimators

#endif  // VUNLEARN_ESTIMATORS_ESTIMATORS_H_
