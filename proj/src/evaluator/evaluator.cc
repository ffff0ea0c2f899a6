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

#include "vunlearn/evaluator/evaluator.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <set>

#include "vunlearn/common/error.h"

namespace vunlearn::evaluator {
namespace {

double median(std::vector<double> v) {
  require(!v.empty(), ErrorCode::kPrecondition, "median of empty sequence");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

int attribute_classes(const synthgen::FactorDataset& d, int attribute) {
  require(attribute >= 0 &&
              attribute < static_cast<int>(d.spec.sensitive_classes.size()),
          ErrorCode::kPrecondition,
          "attribute " + std::to_string(attribute) + " out of range");
  return d.swapped_attribute == attribute ? d.spec.task_classes
                                          : d.spec.sensitive_classes[attribute];
}

}  // namespace

FeatureMap frozen_front(const trainer::SplitModel& model) {
  return [front = model.front](const nn::Matrix& x) {
    return front.forward(x);
  };
}

FeatureMap identity_map() {
  return [](const nn::Matrix& x) { return x; };
}

FeatureMap constant_map(std::size_t dim) {
  return [dim](const nn::Matrix& x) {
    return nn::Matrix(nn::Matrix::Zero(x.rows(), dim));
  };
}

AttackerModel train_attacker(const FeatureMap& front,
                             const synthgen::FactorDataset& dataset,
                             int attribute_index,
                             const AttackerConfig& config) {
  const int classes = attribute_classes(dataset, attribute_index);
  require(config.data_budget > 0.0 && config.data_budget <= 1.0,
          ErrorCode::kConfig, "attacker data_budget must be in (0, 1]");
  std::vector<std::size_t> rows = dataset.split.train;
  const auto budget = static_cast<std::size_t>(
      std::ceil(config.data_budget * static_cast<double>(rows.size())));
  rows.resize(std::min(rows.size(), std::max<std::size_t>(budget, 1)));
  require(!rows.empty(), ErrorCode::kPrecondition, "empty training split");
  const auto labels = synthgen::sensitive_labels(dataset, attribute_index, rows);
  require(std::set<int>(labels.begin(), labels.end()).size() >= 2,
          ErrorCode::kDegenerate,
          "attacker labels take a single value on the training split");

  AttackerModel a;
  a.front = front;
  a.attribute_index = attribute_index;
  a.classes = classes;
  a.train_rows = rows.size();
  const nn::Matrix h = front(synthgen::features(dataset, rows));
  a.decoder = estimators::train_classifier(h, labels, classes, config.fit);
  a.train_accuracy =
      nn::accuracy(nn::argmax_rows(a.decoder.forward(h)), labels);
  return a;
}

double measure_efficacy(const AttackerModel& attacker,
                        const synthgen::FactorDataset& dataset) {
  require(!attacker.decoder.empty(), ErrorCode::kNotFitted,
          "attacker is not trained");
  const auto& rows = dataset.split.test;
  require(!rows.empty(), ErrorCode::kPrecondition, "empty test split");
  const nn::Matrix h = attacker.front(synthgen::features(dataset, rows));
  return nn::accuracy(
      nn::argmax_rows(attacker.decoder.forward(h)),
      synthgen::sensitive_labels(dataset, attacker.attribute_index, rows));
}

double measure_utility(const trainer::SplitModel& model,
                       const synthgen::FactorDataset& dataset) {
  const auto& rows = dataset.split.test;
  require(!rows.empty(), ErrorCode::kPrecondition, "empty test split");
  require(model.input_dim() == dataset.x_dim(), ErrorCode::kDimensionMismatch,
          "model expects " + std::to_string(model.input_dim()) +
              " inputs, dataset has " + std::to_string(dataset.x_dim()));
  return nn::accuracy(model.predict(synthgen::features(dataset, rows)),
                      synthgen::task_labels(dataset, rows));
}

double chance_level(const synthgen::FactorDataset& dataset,
                    int attribute_index) {
  return 1.0 / attribute_classes(dataset, attribute_index);
}

std::size_t count_params(const nn::Mlp& model) { return model.param_count(); }
std::size_t count_params(const trainer::SplitModel& model) {
  return model.param_count();
}
std::size_t count_params(const trainer::AuxiliaryHead& head) {
  return head.param_count();
}

std::size_t count_macs(const nn::Mlp& model, std::size_t input_dim) {
  if (model.empty()) return 0;
  require(model.input_dim() == input_dim, ErrorCode::kDimensionMismatch,
          "layer_spec expects " + std::to_string(model.input_dim()) +
              " inputs, got " + std::to_string(input_dim));
  return model.macs();
}

std::size_t count_macs(const trainer::SplitModel& model,
                       std::size_t input_dim) {
  const std::size_t front = count_macs(model.front, input_dim);
  return front + count_macs(model.back, model.representation_dim());
}

std::size_t count_macs(const trainer::AuxiliaryHead& head,
                       std::size_t representation_dim) {
  std::size_t n = count_macs(head.decoder, representation_dim) +
                  count_macs(head.task_classifier, representation_dim);
  for (const auto& c : head.sensitive_classifiers) {
    n += count_macs(c, representation_dim);
  }
  return n;
}

ReconstructionProbe reconstruction_probe(const FeatureMap& front,
                                         const synthgen::FactorDataset& dataset,
                                         int attribute_index,
                                         const estimators::FitConfig& config) {
  const auto block = synthgen::sensitive_block(dataset.spec, attribute_index);
  const auto& train = dataset.split.train;
  const auto& test = dataset.split.test;
  require(!train.empty() && !test.empty(), ErrorCode::kPrecondition,
          "probe needs non-empty train and test splits");
  const nn::Matrix x_train = synthgen::features(dataset, train);
  const nn::Mlp decoder =
      estimators::train_regressor(front(x_train), x_train, config);
  const nn::Matrix x_test = synthgen::features(dataset, test);
  const nn::Matrix err = decoder.forward(front(x_test)) - x_test;
  // Rotate the error back into factor coordinates: u = M^T x.
  const nn::Matrix err_u = err * synthgen::mixing_matrix(dataset.spec);
  ReconstructionProbe p;
  p.overall_error = err_u.squaredNorm() / static_cast<double>(err_u.size());
  const auto cols = err_u.middleCols(static_cast<Eigen::Index>(block.offset),
                                     static_cast<Eigen::Index>(block.width));
  p.sensitive_block_error =
      cols.squaredNorm() / static_cast<double>(cols.size());
  return p;
}

double median_epoch_seconds(const trainer::TrainTrace& trace) {
  require(!trace.epochs.empty(), ErrorCode::kPrecondition, "empty trace");
  std::vector<double> s;
  for (const auto& e : trace.epochs) s.push_back(e.wall_seconds);
  return median(std::move(s));
}

double inference_seconds(const trainer::SplitModel& model,
                         const synthgen::FactorDataset& dataset, int repeats) {
  const nn::Matrix x = synthgen::features(dataset);
  std::vector<double> times;
  for (int i = 0; i < std::max(repeats, 1); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const nn::Matrix logits = model.logits(x);
    times.push_back(std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - t0)
                        .count());
    if (!logits.allFinite()) {
      fail(ErrorCode::kDivergence, "non-finite logits during inference");
    }
  }
  return median(std::move(times));
}

EfficiencyComparison efficiency_report(
    const trainer::TrainTrace& baseline_trace,
    const trainer::TrainTrace& unlearn_trace,
    const trainer::SplitModel& baseline, const trainer::SplitModel& unlearned,
    const trainer::AuxiliaryHead* aux, const synthgen::FactorDataset& dataset) {
  EfficiencyComparison c;
  c.baseline_train_seconds_per_epoch = median_epoch_seconds(baseline_trace);
  c.unlearn_train_seconds_per_epoch = median_epoch_seconds(unlearn_trace);
  c.baseline_inference_seconds = inference_seconds(baseline, dataset);
  c.unlearn_inference_seconds = inference_seconds(unlearned, dataset);
  c.params_baseline = count_params(baseline);
  c.params_unlearn_main = count_params(unlearned);
  c.params_auxiliary = aux != nullptr ? count_params(*aux) : 0;
  c.params_unlearn_total = c.params_unlearn_main + c.params_auxiliary;
  c.macs_main = count_macs(unlearned, dataset.x_dim());
  c.macs_auxiliary =
      aux != nullptr ? count_macs(*aux, unlearned.representation_dim()) : 0;
  c.macs_total = c.macs_main + c.macs_auxiliary;
  return c;
}

nlohmann::json EvaluationReport::to_json() const {
  return {{"format_version", kReportFormatVersion},
          {"efficacy", efficacy},
          {"baseline_efficacy", baseline_efficacy},
          {"utility", utility},
          {"baseline_utility", baseline_utility},
          {"chance_level", chance_level},
          {"params_main", params_main},
          {"params_with_auxiliary", params_with_auxiliary},
          {"macs_per_sample", macs_per_sample},
          {"train_seconds_per_epoch", train_seconds_per_epoch},
          {"inference_seconds_per_epoch", inference_seconds_per_epoch},
          {"config", config},
          {"seed", seed}};
}

nlohmann::json EvaluationReport::without_timing() const {
  nlohmann::json j = to_json();
  j.erase("train_seconds_per_epoch");
  j.erase("inference_seconds_per_epoch");
  return j;
}

EvaluationReport EvaluationReport::from_json(const nlohmann::json& j) {
  try {
    const int version = j.at("format_version").get<int>();
    if (version != kReportFormatVersion) {
      fail(ErrorCode::kVersion,
           "report format_version " + std::to_string(version) +
               " is not supported");
    }
    EvaluationReport r;
    r.efficacy = j.at("efficacy");
    r.baseline_efficacy = j.at("baseline_efficacy");
    r.utility = j.at("utility");
    r.baseline_utility = j.at("baseline_utility");
    r.chance_level = j.at("chance_level");
    r.params_main = j.at("params_main");
    r.params_with_auxiliary = j.at("params_with_auxiliary");
    r.macs_per_sample = j.at("macs_per_sample");
    r.train_seconds_per_epoch = j.at("train_seconds_per_epoch");
    r.inference_seconds_per_epoch = j.at("inference_seconds_per_epoch");
    r.config = j.at("config");
    r.seed = j.at("seed");
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("report: ") + e.what());
  }
}

EvaluationReport evaluate(const synthgen::FactorDataset& dataset,
                          const EvaluateInputs& in) {
  require(in.model != nullptr && in.baseline != nullptr,
          ErrorCode::kPrecondition, "evaluation needs both checkpoints");
  for (const auto* m : {in.model, in.baseline}) {
    require(m->input_dim() == dataset.x_dim(), ErrorCode::kDimensionMismatch,
            "checkpoint expects " + std::to_string(m->input_dim()) +
                " inputs, dataset has " + std::to_string(dataset.x_dim()));
  }
  EvaluationReport r;
  const AttackerModel attack =
      train_attacker(frozen_front(*in.model), dataset, in.attribute_index,
                     in.attacker);
  r.efficacy = measure_efficacy(attack, dataset);
  const AttackerModel base_attack =
      train_attacker(frozen_front(*in.baseline), dataset, in.attribute_index,
                     in.attacker);
  r.baseline_efficacy = measure_efficacy(base_attack, dataset);
  r.utility = measure_utility(*in.model, dataset);
  r.baseline_utility = measure_utility(*in.baseline, dataset);
  r.chance_level = chance_level(dataset, in.attribute_index);
  r.params_main = count_params(*in.model);
  r.params_with_auxiliary =
      r.params_main + (in.aux != nullptr ? count_params(*in.aux) : 0);
  r.macs_per_sample = count_macs(*in.model, dataset.x_dim());
  if (in.trace != nullptr && !in.trace->epochs.empty()) {
    r.train_seconds_per_epoch = median_epoch_seconds(*in.trace);
  }
  r.inference_seconds_per_epoch = inference_seconds(*in.model, dataset);
  r.config = in.config_echo;
  r.seed = in.seed;
  return r;
}

}  // namespace vunlearn::evaluator
