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

#ifndef VUNLEARN_EVALUATOR_EVALUATOR_H_
#define VUNLEARN_EVALUATOR_EVALUATOR_H_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vunlearn/estimators/estimators.h"
#include "vunlearn/synthgen/dataset.h"
#include "vunlearn/trainer/trainer.h"

namespace vunlearn::evaluator {

// Frozen map x -> h under attack.
using FeatureMap = std::function<nn::Matrix(const nn::Matrix&)>;

FeatureMap frozen_front(const trainer::SplitModel& model);
FeatureMap identity_map();
// Maps every input to the same `dim`-wide zero vector.
FeatureMap constant_map(std::size_t dim = 1);

struct AttackerConfig {
  // Matches the auxiliary sensitive classifier's capacity by default.
  estimators::FitConfig fit{.hidden_layers = 2,
                            .hidden_width = 0,
                            .activation = nn::Activation::kTanh,
                            .steps = 2000,
                            .batch_size = 128,
                            .learning_rate = 1e-2,
                            .anneal = true,
                            .optimizer = estimators::Optimizer::kAdam,
                            .seed = 0,
                            .holdout_fraction = 0.2};
  // Fraction of the training split the attacker may use.
  double data_budget = 1.0;
};

struct AttackerModel {
  FeatureMap front;
  nn::Mlp decoder;
  int attribute_index = 0;
  int classes = 0;
  std::size_t train_rows = 0;
  double train_accuracy = 0.0;
};

// Trains on the train split only; `front` is never updated.
AttackerModel train_attacker(const FeatureMap& front,
                             const synthgen::FactorDataset& dataset,
                             int attribute_index,
                             const AttackerConfig& config);

// Attacker accuracy on the test split; lower is better.
double measure_efficacy(const AttackerModel& attacker,
                        const synthgen::FactorDataset& dataset);

// Top-1 task accuracy on the test split.
double measure_utility(const trainer::SplitModel& model,
                       const synthgen::FactorDataset& dataset);

double chance_level(const synthgen::FactorDataset& dataset,
                    int attribute_index);

std::size_t count_params(const nn::Mlp& model);
std::size_t count_params(const trainer::SplitModel& model);
std::size_t count_params(const trainer::AuxiliaryHead& head);

std::size_t count_macs(const nn::Mlp& model, std::size_t input_dim);
std::size_t count_macs(const trainer::SplitModel& model, std::size_t input_dim);
std::size_t count_macs(const trainer::AuxiliaryHead& head,
                       std::size_t representation_dim);

// Per-block reconstruction error of the sensitive block after decoding x
// from h, measured in unmixed factor coordinates on the test split.
struct ReconstructionProbe {
  double sensitive_block_error = 0.0;
  double overall_error = 0.0;
};
ReconstructionProbe reconstruction_probe(const FeatureMap& front,
                                         const synthgen::FactorDataset& dataset,
                                         int attribute_index,
                                         const estimators::FitConfig& config);

// Median over epochs (at least one).
double median_epoch_seconds(const trainer::TrainTrace& trace);
// Median wall-clock of `repeats` full forward passes over the dataset.
double inference_seconds(const trainer::SplitModel& model,
                         const synthgen::FactorDataset& dataset,
                         int repeats = 3);

struct EfficiencyComparison {
  double baseline_train_seconds_per_epoch = 0.0;
  double unlearn_train_seconds_per_epoch = 0.0;
  double baseline_inference_seconds = 0.0;
  double unlearn_inference_seconds = 0.0;
  std::size_t params_baseline = 0;
  std::size_t params_unlearn_main = 0;
  std::size_t params_auxiliary = 0;
  std::size_t params_unlearn_total = 0;
  std::size_t macs_main = 0;
  std::size_t macs_auxiliary = 0;
  std::size_t macs_total = 0;
};

EfficiencyComparison efficiency_report(
    const trainer::TrainTrace& baseline_trace,
    const trainer::TrainTrace& unlearn_trace,
    const trainer::SplitModel& baseline, const trainer::SplitModel& unlearned,
    const trainer::AuxiliaryHead* aux, const synthgen::FactorDataset& dataset);

inline constexpr int kReportFormatVersion = 1;

struct EvaluationReport {
  double efficacy = 0.0;
  double baseline_efficacy = 0.0;
  double utility = 0.0;
  double baseline_utility = 0.0;
  double chance_level = 0.0;
  std::size_t params_main = 0;
  std::size_t params_with_auxiliary = 0;
  std::size_t macs_per_sample = 0;
  double train_seconds_per_epoch = 0.0;
  double inference_seconds_per_epoch = 0.0;
  nlohmann::json config = nlohmann::json::object();
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static EvaluationReport from_json(const nlohmann::json& j);
  // Serialized form with the timing fields removed.
  nlohmann::json without_timing() const;
};

struct EvaluateInputs {
  const trainer::SplitModel* model = nullptr;
  const trainer::SplitModel* baseline = nullptr;
  const trainer::AuxiliaryHead* aux = nullptr;  // optional
  const trainer::TrainTrace* trace = nullptr;   // optional
  int attribute_index = 0;
  AttackerConfig attacker;
  nlohmann::json config_echo = nlohmann::json::object();
  std::uint64_t seed = 0;
};

EvaluationReport evaluate(const synthgen::FactorDataset& dataset,
                          const EvaluateInputs& inputs);

}  // namespace vunlearn::evaluator

#endif  // VUNLEARN_EVALUATOR_EVALUATOR_H_
