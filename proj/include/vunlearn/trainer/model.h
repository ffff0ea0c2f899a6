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

#ifndef VUNLEARN_TRAINER_MODEL_H_
#define VUNLEARN_TRAINER_MODEL_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <random>
#include <vector>

#include "json.hpp"
#include "vunlearn/estimators/estimators.h"
#include "vunlearn/nn/mlp.h"

namespace vunlearn::trainer {

struct ModelSpec {
  std::vector<std::size_t> hidden{16, 8, 16};
  nn::Activation activation = nn::Activation::kRelu;
  // Activation of the front's last layer, i.e. of h itself.
  nn::Activation representation_activation = nn::Activation::kIdentity;
  // Layer boundary that emits h. Defaults to floor(L / 2) for L layers.
  std::optional<std::size_t> split_index;
};

// Front x -> h and back h -> task logits. Hidden layers carry the hidden
// activation except the one emitting h; the last back layer is linear.
struct SplitModel {
  nn::Mlp front;
  nn::Mlp back;
  std::size_t split_index = 0;

  std::size_t input_dim() const { return front.input_dim(); }
  std::size_t representation_dim() const { return front.output_dim(); }
  std::size_t task_classes() const { return back.output_dim(); }
  std::size_t layer_count() const {
    return front.layers().size() + back.layers().size();
  }
  std::size_t param_count() const {
    return front.param_count() + back.param_count();
  }
  std::size_t macs() const { return front.macs() + back.macs(); }

  nn::Matrix represent(const nn::Matrix& x) const { return front.forward(x); }
  nn::Matrix logits(const nn::Matrix& x) const {
    return back.forward(front.forward(x));
  }
  std::vector<int> predict(const nn::Matrix& x) const {
    return nn::argmax_rows(logits(x));
  }

  // Flat parameter view: front parameters first, then back.
  std::vector<double> flat() const;
  void set_flat(std::span<const double> values);

  nlohmann::json layer_spec() const;
};

// Throws ErrorCode::kConfig for an invalid split.
SplitModel build_split_model(std::size_t input_dim, std::size_t task_classes,
                             const ModelSpec& spec, std::mt19937_64& rng);

// Decoder h -> x and classifiers q(y | h), q(z_i | h).
struct AuxiliaryHead {
  nn::Mlp decoder;
  nn::Mlp task_classifier;
  std::vector<nn::Mlp> sensitive_classifiers;
  std::vector<int> sensitive_attributes;  // dataset attribute indices
  // Adam state for decoder, task classifier, then sensitive classifiers.
  // Created on the first refresh; not checkpointed.
  std::vector<nn::Adam> optimizers;

  std::size_t param_count() const;
  std::size_t macs() const;
  std::vector<double> flat() const;
};

AuxiliaryHead build_auxiliary_head(std::size_t representation_dim,
                                   std::size_t input_dim,
                                   std::size_t task_classes,
                                   std::span<const int> sensitive_attributes,
                                   std::span<const int> sensitive_classes,
                                   const estimators::FitConfig& capacity,
                                   std::mt19937_64& rng);

inline constexpr int kCheckpointFormatVersion = 1;

// Versioned container: JSON layer_spec header + float32 parameter blob.
void save_checkpoint(const SplitModel& model, const std::filesystem::path& path,
                     const nlohmann::json& extra = nlohmann::json::object());
SplitModel load_checkpoint(const std::filesystem::path& path,
                           nlohmann::json* extra = nullptr);

void save_auxiliary(const AuxiliaryHead& head, const std::filesystem::path& path);
AuxiliaryHead load_auxiliary(const std::filesystem::path& path);

}  // namespace vunlearn::trainer

#endif  // VUNLEARN_TRAINER_MODEL_H_
