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

#ifndef VUNLEARN_TRAINER_TRAINER_H_
#define VUNLEARN_TRAINER_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vunlearn/common/error.h"
#include "vunlearn/detachment/coefficients.h"
#include "vunlearn/synthgen/dataset.h"
#include "vunlearn/trainer/model.h"

namespace vunlearn::trainer {

enum class TrainMode { kSequential, kParallel };

TrainMode parse_mode(const std::string& name);
std::string mode_name(TrainMode mode);

struct TrainConfig {
  double alpha = detachment::kDefaultAlpha;
  double beta = detachment::kDefaultBeta;
  std::vector<double> gammas{detachment::kDefaultGamma};
  std::vector<int> sensitive_attributes{0};
  int epochs = 30;
  std::size_t batch_size = 64;
  double lr_main = 0.1;
  // Front learning rate; negative means "same as lr_main".
  double lr_front = -1.0;
  double lr_aux = 1e-2;  // Adam step size of the auxiliary refresh
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::kSequential;
  // Main-branch updates are rescaled to at most this global gradient norm;
  // 0 disables.
  double max_grad_norm = 20.0;
  // Linear decay of the main learning rates to zero over training.
  bool anneal = false;
  int refresh_period = 1;
  int inner_steps = 10;
  // Adam steps of a fresh fit of each sensitive classifier on the detached
  // training-split h at the start of every epoch; 0 disables.
  int refit_steps = 500;
  // Auxiliary head capacity (hidden layers and width).
  int aux_hidden_layers = 2;
  std::size_t aux_hidden_width = 0;

  double front_rate() const { return lr_front < 0.0 ? lr_main : lr_front; }
  // Multiplier on the main learning rates at `step` of `total` steps.
  double rate_scale(long step, long total) const;
};

// Throws kConfig for bad counts and kConstraint for bad coefficients.
void validate(const TrainConfig& config, const synthgen::FactorDataset& data);

struct Batch {
  nn::Matrix x;
  std::vector<int> y;
  std::vector<std::vector<int>> z;  // one column per configured attribute
};

Batch make_batch(const synthgen::FactorDataset& data,
                 std::span<const std::size_t> rows,
                 std::span<const int> sensitive_attributes);

// Terms of the front/back objective evaluated on one batch:
//
//   J = CE_task + lambda1 * R + lambda2 * CE_y + Σ kappa_i D_i
//
// with R the decoder reconstruction error, so that -lambda1 * info_x and
// -lambda2 * info_y are the surrogate terms (up to the constant H(y)), and
// D_i = KL(uniform || q(z_i | h)) the confusion term on the sensitive
// classifier, weighted by kappa_i = alpha * gamma_i. The front descends D_i
// while the auxiliary classifier keeps fitting z_i, so I(h, z_i) is pushed
// down without the vanishing gradient of a reversed cross-entropy.
struct ObjectiveTerms {
  double task_ce = 0.0;
  double reconstruction_error = 0.0;
  double label_entropy_y = 0.0;
  double ce_y = 0.0;
  std::vector<double> label_entropy_z;
  std::vector<double> ce_z;
  std::vector<double> confusion_z;
  double objective = 0.0;

  double info_x() const { return -reconstruction_error; }
  double info_y() const { return label_entropy_y - ce_y; }
  std::vector<double> info_z() const;
};

struct ObjectiveGradients {
  nn::Gradients front;
  nn::Gradients back;
  ObjectiveTerms terms;

  std::vector<double> flat() const;  // front then back
};

ObjectiveGradients objective_gradients(const SplitModel& model,
                                       const AuxiliaryHead& aux,
                                       const Batch& batch,
                                       const detachment::CoefficientSet& coeffs);

// Task cross-entropy only.
ObjectiveGradients task_gradients(const SplitModel& model, const Batch& batch);

double objective_value(const SplitModel& model, const AuxiliaryHead& aux,
                       const Batch& batch,
                       const detachment::CoefficientSet& coeffs);

// `inner_steps` Adam steps of each auxiliary estimator on detached h.
AuxiliaryHead refresh_auxiliary(const AuxiliaryHead& aux, const nn::Matrix& h,
                                const Batch& batch, double learning_rate,
                                int inner_steps);

struct StepResult {
  ObjectiveGradients main;
  bool refreshed = false;
};

// One batch of detachment training. The main-branch gradients are taken
// against the auxiliary state at the start of the step, and the auxiliary
// refresh reads only the detached h, so the two branches are independent
// and kParallel runs them on separate threads.
StepResult train_step(SplitModel& model, AuxiliaryHead& aux,
                      const Batch& batch,
                      const detachment::CoefficientSet& coeffs,
                      const TrainConfig& config, bool refresh,
                      TrainMode mode, double rate_scale = 1.0);

struct EpochRecord {
  int epoch = 0;
  double task_loss = 0.0;
  double validation_accuracy = 0.0;
  detachment::LossBreakdown breakdown;
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<double> sigmas;
  double objective = 0.0;
  double gap_bound = 0.0;
  double wall_seconds = 0.0;
};

struct TrainTrace {
  std::vector<EpochRecord> epochs;

  std::string to_jsonl() const;
  static TrainTrace from_jsonl(const std::string& text);
  // Equality ignoring wall-clock fields.
  bool same_results(const TrainTrace& other) const;
};

class TrainingDiverged : public Error {
 public:
  TrainingDiverged(const std::string& message, TrainTrace partial)
      : Error(ErrorCode::kDivergence, message), partial_(std::move(partial)) {}
  const TrainTrace& partial() const { return partial_; }

 private:
  TrainTrace partial_;
};

struct BaselineResult {
  SplitModel model;
  TrainTrace trace;
};

struct UnlearnResult {
  SplitModel model;
  AuxiliaryHead aux;
  TrainTrace trace;
};

BaselineResult train_baseline(const synthgen::FactorDataset& data,
                              const ModelSpec& spec, const TrainConfig& config);

UnlearnResult train_unlearn(const synthgen::FactorDataset& data,
                            const ModelSpec& spec, const TrainConfig& config);

struct GradientCheck {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Central finite differences (step 1e-4) of the objective on up to
// `subset` randomly chosen front/back parameters.
GradientCheck gradient_check(const SplitModel& model, const AuxiliaryHead& aux,
                             const Batch& batch,
                             const detachment::CoefficientSet& coeffs,
                             std::size_t subset = 100,
                             std::uint64_t seed = 0);

}  // namespace vunlearn::trainer

#endif  // VUNLEARN_TRAINER_TRAINER_H_
