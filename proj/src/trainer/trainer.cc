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

#include "vunlearn/trainer/trainer.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace vunlearn::trainer {
namespace {

constexpr std::uint64_t kShuffleStream = 0x73687566ULL;
constexpr std::uint64_t kAuxStream = 0x617578ULL;
constexpr double kFiniteDifferenceStep = 1e-4;

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

std::vector<int> sensitive_class_counts(const synthgen::FactorDataset& data,
                                        std::span<const int> attributes) {
  std::vector<int> out;
  for (int a : attributes) {
    // A swapped dataset carries the task labels in column `a`.
    out.push_back(data.swapped_attribute == a
                      ? data.spec.task_classes
                      : data.spec.sensitive_classes.at(a));
  }
  return out;
}

int task_class_count(const synthgen::FactorDataset& data) {
  return data.swapped_attribute >= 0
             ? data.spec.sensitive_classes.at(data.swapped_attribute)
             : data.spec.task_classes;
}

void add_scaled(nn::Matrix& acc, const nn::Matrix& g, double w) {
  if (w != 0.0) acc += w * g;
}

estimators::FitConfig aux_capacity(const TrainConfig& config) {
  estimators::FitConfig capacity;
  capacity.hidden_layers = config.aux_hidden_layers;
  capacity.hidden_width = config.aux_hidden_width;
  return capacity;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

double validation_accuracy(const SplitModel& model,
                           const synthgen::FactorDataset& data) {
  const auto& rows =
      data.split.validation.empty() ? data.split.train : data.split.validation;
  const auto labels = synthgen::task_labels(data, rows);
  return nn::accuracy(model.predict(synthgen::features(data, rows)), labels);
}

// Plug-in H(y) on the training rows; with a deterministic, injective f this
// equals I(x, y).
double train_task_entropy(const synthgen::FactorDataset& data) {
  return nn::label_entropy(synthgen::task_labels(data, data.split.train),
                           task_class_count(data));
}

}  // namespace

TrainMode parse_mode(const std::string& name) {
  if (name == "sequential" || name == "sequential-deterministic") {
    return TrainMode::kSequential;
  }
  if (name == "parallel" || name == "parallel-branches") {
    return TrainMode::kParallel;
  }
  fail(ErrorCode::kConfig, "unknown mode '" + name + "'");
}

std::string mode_name(TrainMode mode) {
  return mode == TrainMode::kSequential ? "sequential" : "parallel";
}

double TrainConfig::rate_scale(long step, long total) const {
  if (!anneal || total <= 0) return 1.0;
  return 1.0 - static_cast<double>(step) / static_cast<double>(total);
}

void validate(const TrainConfig& config, const synthgen::FactorDataset& data) {
  require(config.epochs >= 1, ErrorCode::kPrecondition, "epochs must be >= 1");
  require(config.batch_size >= 1, ErrorCode::kPrecondition,
          "batch_size must be >= 1");
  require(config.refresh_period >= 1, ErrorCode::kPrecondition,
          "refresh_period must be >= 1");
  require(config.inner_steps >= 0, ErrorCode::kPrecondition,
          "inner_steps must be >= 0");
  require(config.refit_steps >= 0, ErrorCode::kPrecondition,
          "refit_steps must be >= 0");
  require(config.lr_main >= 0.0 && config.lr_aux >= 0.0,
          ErrorCode::kConfig, "learning rates must be >= 0");
  require(!data.split.train.empty(), ErrorCode::kPrecondition,
          "dataset has an empty training split");
  for (int a : config.sensitive_attributes) {
    require(a >= 0 &&
                a < static_cast<int>(data.spec.sensitive_classes.size()),
            ErrorCode::kConfig,
            "sensitive attribute " + std::to_string(a) + " not in dataset");
  }
}

Batch make_batch(const synthgen::FactorDataset& data,
                 std::span<const std::size_t> rows,
                 std::span<const int> sensitive_attributes) {
  Batch b;
  b.x = synthgen::features(data, rows);
  b.y = synthgen::task_labels(data, rows);
  for (int a : sensitive_attributes) {
    b.z.push_back(synthgen::sensitive_labels(data, a, rows));
  }
  return b;
}

std::vector<double> ObjectiveTerms::info_z() const {
  std::vector<double> out;
  for (std::size_t i = 0; i < ce_z.size(); ++i) {
    out.push_back(label_entropy_z[i] - ce_z[i]);
  }
  return out;
}

std::vector<double> ObjectiveGradients::flat() const {
  std::vector<double> out = nn::flatten(front);
  const auto b = nn::flatten(back);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

ObjectiveGradients task_gradients(const SplitModel& model, const Batch& batch) {
  ObjectiveGradients g;
  nn::Tape front_tape, back_tape;
  const nn::Matrix h = model.front.forward(batch.x, front_tape);
  const nn::Matrix logits = model.back.forward(h, back_tape);
  const auto ce = nn::softmax_cross_entropy(logits, batch.y);
  const nn::Matrix dh = model.back.backward(back_tape, ce.grad, g.back);
  model.front.backward(front_tape, dh, g.front);
  g.terms.task_ce = ce.loss;
  g.terms.objective = ce.loss;
  return g;
}

ObjectiveGradients objective_gradients(
    const SplitModel& model, const AuxiliaryHead& aux, const Batch& batch,
    const detachment::CoefficientSet& coeffs) {
  require(aux.sensitive_classifiers.size() == coeffs.gammas.size() &&
              batch.z.size() == coeffs.gammas.size(),
          ErrorCode::kDimensionMismatch,
          "sensitive classifiers, label columns and gammas must align");
  ObjectiveGradients g;
  ObjectiveTerms& t = g.terms;

  nn::Tape front_tape, back_tape;
  const nn::Matrix h = model.front.forward(batch.x, front_tape);
  const nn::Matrix logits = model.back.forward(h, back_tape);
  const auto task = nn::softmax_cross_entropy(logits, batch.y);
  nn::Matrix dh = model.back.backward(back_tape, task.grad, g.back);
  t.task_ce = task.loss;

  nn::Gradients scratch;
  {
    nn::Tape tape;
    const nn::Matrix xhat = aux.decoder.forward(h, tape);
    const auto rec = nn::mean_squared_error(xhat, batch.x);
    t.reconstruction_error = rec.loss;
    add_scaled(dh, aux.decoder.backward(tape, rec.grad, scratch),
               coeffs.lambda1);
  }
  {
    nn::Tape tape;
    const nn::Matrix out = aux.task_classifier.forward(h, tape);
    const auto ce = nn::softmax_cross_entropy(out, batch.y);
    t.ce_y = ce.loss;
    t.label_entropy_y =
        nn::label_entropy(batch.y, static_cast<int>(out.cols()));
    add_scaled(dh, aux.task_classifier.backward(tape, ce.grad, scratch),
               coeffs.lambda2);
  }
  for (std::size_t i = 0; i < aux.sensitive_classifiers.size(); ++i) {
    const nn::Mlp& clf = aux.sensitive_classifiers[i];
    nn::Tape tape;
    const nn::Matrix out = clf.forward(h, tape);
    const auto ce = nn::softmax_cross_entropy(out, batch.z[i]);
    t.ce_z.push_back(ce.loss);
    t.label_entropy_z.push_back(
        nn::label_entropy(batch.z[i], static_cast<int>(out.cols())));
    const auto confusion = nn::uniform_divergence(out);
    t.confusion_z.push_back(confusion.loss);
    add_scaled(dh, clf.backward(tape, confusion.grad, scratch),
               coeffs.suppression(i));
  }
  model.front.backward(front_tape, dh, g.front);

  t.objective = t.task_ce + coeffs.lambda1 * t.reconstruction_error -
                coeffs.lambda2 * t.info_y();
  for (std::size_t i = 0; i < t.confusion_z.size(); ++i) {
    t.objective += coeffs.suppression(i) * t.confusion_z[i];
  }
  return g;
}

double objective_value(const SplitModel& model, const AuxiliaryHead& aux,
                       const Batch& batch,
                       const detachment::CoefficientSet& coeffs) {
  return objective_gradients(model, aux, batch, coeffs).terms.objective;
}

AuxiliaryHead refresh_auxiliary(const AuxiliaryHead& aux, const nn::Matrix& h,
                                const Batch& batch, double learning_rate,
                                int inner_steps) {
  AuxiliaryHead next = aux;
  const std::size_t heads = 2 + next.sensitive_classifiers.size();
  if (next.optimizers.size() != heads) {
    next.optimizers.assign(heads, nn::Adam(learning_rate));
  }
  nn::Gradients grads;
  for (int step = 0; step < inner_steps; ++step) {
    {
      nn::Tape tape;
      const auto rec =
          nn::mean_squared_error(next.decoder.forward(h, tape), batch.x);
      next.decoder.backward(tape, rec.grad, grads);
      next.optimizers[0].step(next.decoder, grads);
    }
    {
      nn::Tape tape;
      const auto ce = nn::softmax_cross_entropy(
          next.task_classifier.forward(h, tape), batch.y);
      next.task_classifier.backward(tape, ce.grad, grads);
      next.optimizers[1].step(next.task_classifier, grads);
    }
    for (std::size_t i = 0; i < next.sensitive_classifiers.size(); ++i) {
      nn::Mlp& clf = next.sensitive_classifiers[i];
      nn::Tape tape;
      const auto ce =
          nn::softmax_cross_entropy(clf.forward(h, tape), batch.z[i]);
      clf.backward(tape, ce.grad, grads);
      next.optimizers[2 + i].step(clf, grads);
    }
  }
  return next;
}

namespace {

double clip_scale(const ObjectiveGradients& g, double max_norm) {
  if (max_norm <= 0.0) return 1.0;
  double sq = 0.0;
  for (double v : g.flat()) sq += v * v;
  const double norm = std::sqrt(sq);
  return norm > max_norm ? max_norm / norm : 1.0;
}

}  // namespace

StepResult train_step(SplitModel& model, AuxiliaryHead& aux,
                      const Batch& batch,
                      const detachment::CoefficientSet& coeffs,
                      const TrainConfig& config, bool refresh,
                      TrainMode mode, double rate_scale) {
  StepResult result;
  result.refreshed = refresh;
  const nn::Matrix h = model.represent(batch.x);
  AuxiliaryHead next;
  auto aux_branch = [&] {
    next = refresh_auxiliary(aux, h, batch, config.lr_aux, config.inner_steps);
  };
  auto main_branch = [&] {
    result.main = objective_gradients(model, aux, batch, coeffs);
  };
  if (!refresh) {
    main_branch();
  } else if (mode == TrainMode::kParallel) {
    std::thread worker(aux_branch);
    try {
      main_branch();
    } catch (...) {
      worker.join();
      throw;
    }
    worker.join();
  } else {
    main_branch();
    aux_branch();
  }
  if (refresh) aux = std::move(next);
  const double clip = clip_scale(result.main, config.max_grad_norm);
  model.front.sgd_step(result.main.front,
                       clip * rate_scale * config.front_rate());
  model.back.sgd_step(result.main.back, clip * rate_scale * config.lr_main);
  return result;
}

namespace {

struct EpochAccumulator {
  double task = 0.0, info_x = 0.0, info_y = 0.0, objective = 0.0;
  std::vector<double> info_z;
  std::size_t batches = 0;

  void add(const ObjectiveTerms& t) {
    task += t.task_ce;
    info_x += t.info_x();
    info_y += t.info_y();
    objective += t.objective;
    const auto iz = t.info_z();
    info_z.resize(iz.size(), 0.0);
    for (std::size_t i = 0; i < iz.size(); ++i) info_z[i] += iz[i];
    ++batches;
  }
};

std::vector<std::vector<std::size_t>> epoch_batches(
    const std::vector<std::size_t>& train, std::size_t batch_size,
    std::mt19937_64& rng) {
  std::vector<std::size_t> order = train;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t pos = 0; pos < order.size(); pos += batch_size) {
    out.emplace_back(order.begin() + pos,
                     order.begin() + std::min(order.size(), pos + batch_size));
  }
  return out;
}

EpochRecord close_epoch(int epoch, const EpochAccumulator& acc,
                        const detachment::CoefficientSet& coeffs,
                        double info_xy, const SplitModel& model,
                        const synthgen::FactorDataset& data, double seconds) {
  const double n = static_cast<double>(std::max<std::size_t>(acc.batches, 1));
  EpochRecord r;
  r.epoch = epoch;
  r.task_loss = acc.task / n;
  r.objective = acc.objective / n;
  std::vector<double> iz = acc.info_z;
  for (double& v : iz) v /= n;
  r.breakdown =
      detachment::surrogate_loss(coeffs, acc.info_x / n, acc.info_y / n, iz);
  r.lambda1 = coeffs.lambda1;
  r.lambda2 = coeffs.lambda2;
  r.sigmas = coeffs.sigmas;
  r.gap_bound =
      detachment::gap_bound(coeffs, info_xy, r.breakdown.info_y, iz);
  r.validation_accuracy = validation_accuracy(model, data);
  r.wall_seconds = seconds;
  return r;
}

void refit_sensitive(AuxiliaryHead& aux, const SplitModel& model,
                     const synthgen::FactorDataset& data,
                     const TrainConfig& config, int epoch) {
  const auto& rows = data.split.train;
  const nn::Matrix h = model.represent(synthgen::features(data, rows));
  estimators::FitConfig fit = aux_capacity(config);
  fit.steps = config.refit_steps;
  for (std::size_t i = 0; i < aux.sensitive_classifiers.size(); ++i) {
    const int attribute = aux.sensitive_attributes[i];
    fit.seed = config.seed + 1000003ULL * static_cast<std::uint64_t>(epoch) + i;
    aux.sensitive_classifiers[i] = estimators::train_classifier(
        h, synthgen::sensitive_labels(data, attribute, rows),
        static_cast<int>(aux.sensitive_classifiers[i].output_dim()), fit);
  }
  aux.optimizers.clear();
}

long total_steps(const synthgen::FactorDataset& data,
                 const TrainConfig& config) {
  const std::size_t n = data.split.train.size();
  const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  return static_cast<long>(per_epoch) * config.epochs;
}

}  // namespace

BaselineResult train_baseline(const synthgen::FactorDataset& data,
                              const ModelSpec& spec,
                              const TrainConfig& config) {
  validate(config, data);
  std::mt19937_64 init(config.seed);
  BaselineResult out{build_split_model(data.x_dim(), task_class_count(data),
                                       spec, init),
                     {}};
  auto shuffle = stream(config.seed, kShuffleStream);
  const auto coeffs = detachment::derive_coefficients(0.0, 0.0, {});
  const long total = total_steps(data, config);
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochAccumulator acc;
    for (const auto& rows :
         epoch_batches(data.split.train, config.batch_size, shuffle)) {
      const Batch batch = make_batch(data, rows, {});
      const ObjectiveGradients g = task_gradients(out.model, batch);
      if (!std::isfinite(g.terms.task_ce)) {
        throw TrainingDiverged("non-finite task loss in epoch " +
                                   std::to_string(epoch),
                               out.trace);
      }
      const double scale =
          config.rate_scale(step++, total) * clip_scale(g, config.max_grad_norm);
      out.model.front.sgd_step(g.front, scale * config.front_rate());
      out.model.back.sgd_step(g.back, scale * config.lr_main);
      acc.add(g.terms);
    }
    out.trace.epochs.push_back(close_epoch(epoch, acc, coeffs, 0.0, out.model,
                                           data, seconds_since(t0)));
  }
  return out;
}

UnlearnResult train_unlearn(const synthgen::FactorDataset& data,
                            const ModelSpec& spec, const TrainConfig& config) {
  const auto coeffs = detachment::derive_coefficients(
      config.alpha, config.beta, config.gammas);
  validate(config, data);
  require(config.gammas.size() == config.sensitive_attributes.size(),
          ErrorCode::kConfig,
          "one gamma per sensitive attribute required (got " +
              std::to_string(config.gammas.size()) + " for " +
              std::to_string(config.sensitive_attributes.size()) + ")");

  std::mt19937_64 init(config.seed);
  UnlearnResult out{
      build_split_model(data.x_dim(), task_class_count(data), spec, init),
      {},
      {}};
  auto aux_init = stream(config.seed, kAuxStream);
  const auto classes =
      sensitive_class_counts(data, config.sensitive_attributes);
  out.aux = build_auxiliary_head(
      out.model.representation_dim(), data.x_dim(), task_class_count(data),
      config.sensitive_attributes, classes, aux_capacity(config), aux_init);

  auto shuffle = stream(config.seed, kShuffleStream);
  const double info_xy = train_task_entropy(data);
  const long total = total_steps(data, config);
  bool suppresses = false;
  for (std::size_t i = 0; i < coeffs.gammas.size(); ++i) {
    suppresses = suppresses || coeffs.suppression(i) > 0.0;
  }
  long step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (config.refit_steps > 0 && suppresses) {
      refit_sensitive(out.aux, out.model, data, config, epoch);
    }
    EpochAccumulator acc;
    for (const auto& rows :
         epoch_batches(data.split.train, config.batch_size, shuffle)) {
      const Batch batch = make_batch(data, rows, config.sensitive_attributes);
      const bool refresh = step % config.refresh_period == 0;
      const StepResult r =
          train_step(out.model, out.aux, batch, coeffs, config, refresh,
                     config.mode, config.rate_scale(step, total));
      ++step;
      if (!std::isfinite(r.main.terms.objective)) {
        throw TrainingDiverged("non-finite objective in epoch " +
                                   std::to_string(epoch),
                               out.trace);
      }
      acc.add(r.main.terms);
    }
    out.trace.epochs.push_back(close_epoch(epoch, acc, coeffs, info_xy,
                                           out.model, data,
                                           seconds_since(t0)));
  }
  return out;
}

GradientCheck gradient_check(const SplitModel& model, const AuxiliaryHead& aux,
                             const Batch& batch,
                             const detachment::CoefficientSet& coeffs,
                             std::size_t subset, std::uint64_t seed) {
  require(batch.x.rows() > 0, ErrorCode::kPrecondition, "empty batch");
  const std::vector<double> params = model.flat();
  for (double p : params) {
    require(std::isfinite(p), ErrorCode::kPrecondition,
            "non-finite model parameter");
  }
  require(batch.x.allFinite(), ErrorCode::kPrecondition,
          "non-finite batch value");
  const ObjectiveGradients g = objective_gradients(model, aux, batch, coeffs);
  const std::vector<double> analytic = g.flat();

  std::vector<std::size_t> indices(params.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(indices.begin(), indices.end(), rng);
  indices.resize(std::min(subset, indices.size()));

  GradientCheck out;
  SplitModel probe = model;
  std::vector<double> p = params;
  for (std::size_t i : indices) {
    p[i] = params[i] + kFiniteDifferenceStep;
    probe.set_flat(p);
    const double up = objective_value(probe, aux, batch, coeffs);
    p[i] = params[i] - kFiniteDifferenceStep;
    probe.set_flat(p);
    const double down = objective_value(probe, aux, batch, coeffs);
    p[i] = params[i];
    const double numeric = (up - down) / (2.0 * kFiniteDifferenceStep);
    require(std::isfinite(numeric), ErrorCode::kPrecondition,
            "non-finite objective during gradient check");
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-6});
    out.max_rel_error =
        std::max(out.max_rel_error, std::abs(analytic[i] - numeric) / denom);
    ++out.checked;
  }
  return out;
}

std::string TrainTrace::to_jsonl() const {
  std::ostringstream out;
  for (const EpochRecord& r : epochs) {
    nlohmann::json j = {
        {"epoch", r.epoch},
        {"task_loss", r.task_loss},
        {"validation_accuracy", r.validation_accuracy},
        {"info_x", r.breakdown.info_x},
        {"info_y", r.breakdown.info_y},
        {"info_z", r.breakdown.info_z},
        {"weighted_x", r.breakdown.weighted_x},
        {"weighted_y", r.breakdown.weighted_y},
        {"weighted_z", r.breakdown.weighted_z},
        {"surrogate_total", r.breakdown.surrogate_total},
        {"lambda1", r.lambda1},
        {"lambda2", r.lambda2},
        {"sigmas", r.sigmas},
        {"objective", r.objective},
        {"gap_bound", r.gap_bound},
        {"wall_seconds", r.wall_seconds}};
    out << j.dump() << "\n";
  }
  return out.str();
}

TrainTrace TrainTrace::from_jsonl(const std::string& text) {
  TrainTrace trace;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      EpochRecord r;
      r.epoch = j.at("epoch");
      r.task_loss = j.at("task_loss");
      r.validation_accuracy = j.at("validation_accuracy");
      r.breakdown.info_x = j.at("info_x");
      r.breakdown.info_y = j.at("info_y");
      r.breakdown.info_z = j.at("info_z").get<std::vector<double>>();
      r.breakdown.weighted_x = j.at("weighted_x");
      r.breakdown.weighted_y = j.at("weighted_y");
      r.breakdown.weighted_z = j.at("weighted_z").get<std::vector<double>>();
      r.breakdown.surrogate_total = j.at("surrogate_total");
      r.lambda1 = j.at("lambda1");
      r.lambda2 = j.at("lambda2");
      r.sigmas = j.at("sigmas").get<std::vector<double>>();
      r.objective = j.at("objective");
      r.gap_bound = j.at("gap_bound");
      r.wall_seconds = j.at("wall_seconds");
      trace.epochs.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kMalformed, std::string("trace line: ") + e.what());
    }
  }
  return trace;
}

bool TrainTrace::same_results(const TrainTrace& other) const {
  if (epochs.size() != other.epochs.size()) return false;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const EpochRecord& a = epochs[i];
    const EpochRecord& b = other.epochs[i];
    if (a.epoch != b.epoch || a.task_loss != b.task_loss ||
        a.validation_accuracy != b.validation_accuracy ||
        a.breakdown.info_x != b.breakdown.info_x ||
        a.breakdown.info_y != b.breakdown.info_y ||
        a.breakdown.info_z != b.breakdown.info_z ||
        a.breakdown.surrogate_total != b.breakdown.surrogate_total ||
        a.objective != b.objective || a.gap_bound != b.gap_bound) {
      return false;
    }
  }
  return true;
}

}  // namespace vunlearn::trainer
