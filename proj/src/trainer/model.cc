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

#include "vunlearn/trainer/model.h"

#include "vunlearn/common/container.h"
#include "vunlearn/common/error.h"

namespace vunlearn::trainer {
namespace {

std::vector<float> to_f32(const std::vector<double>& v) {
  return std::vector<float>(v.begin(), v.end());
}

std::vector<double> to_f64(std::span<const float> v) {
  return std::vector<double>(v.begin(), v.end());
}

}  // namespace

std::vector<double> SplitModel::flat() const {
  std::vector<double> out = front.flat();
  const std::vector<double> b = back.flat();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

void SplitModel::set_flat(std::span<const double> values) {
  require(values.size() == param_count(), ErrorCode::kDimensionMismatch,
          "parameter vector does not match model");
  front.set_flat(values.first(front.param_count()));
  back.set_flat(values.subspan(front.param_count()));
}

nlohmann::json SplitModel::layer_spec() const {
  nlohmann::json spec = front.layer_spec();
  for (const auto& layer : back.layer_spec()) spec.push_back(layer);
  return spec;
}

SplitModel build_split_model(std::size_t input_dim, std::size_t task_classes,
                             const ModelSpec& spec, std::mt19937_64& rng) {
  require(input_dim >= 1, ErrorCode::kConfig, "input_dim must be >= 1");
  require(task_classes >= 2, ErrorCode::kConfig, "task_classes must be >= 2");
  std::vector<std::size_t> widths{input_dim};
  widths.insert(widths.end(), spec.hidden.begin(), spec.hidden.end());
  widths.push_back(task_classes);
  const std::size_t layers = widths.size() - 1;
  const std::size_t split = spec.split_index.value_or(layers / 2);
  require(split >= 1 && split < layers, ErrorCode::kConfig,
          "split_index must satisfy 1 <= split_index < " +
              std::to_string(layers) + " (got " + std::to_string(split) + ")");
  nn::Mlp full = nn::Mlp::make(widths, spec.activation);
  full.init(rng);
  full.layers()[split - 1].activation = spec.representation_activation;
  std::vector<nn::Dense> front(full.layers().begin(),
                               full.layers().begin() + split);
  std::vector<nn::Dense> back(full.layers().begin() + split,
                              full.layers().end());
  return SplitModel{nn::Mlp(std::move(front)), nn::Mlp(std::move(back)), split};
}

std::size_t AuxiliaryHead::param_count() const {
  std::size_t n = decoder.param_count() + task_classifier.param_count();
  for (const auto& c : sensitive_classifiers) n += c.param_count();
  return n;
}

std::size_t AuxiliaryHead::macs() const {
  std::size_t n = decoder.macs() + task_classifier.macs();
  for (const auto& c : sensitive_classifiers) n += c.macs();
  return n;
}

std::vector<double> AuxiliaryHead::flat() const {
  std::vector<double> out = decoder.flat();
  auto append = [&](const nn::Mlp& m) {
    const auto f = m.flat();
    out.insert(out.end(), f.begin(), f.end());
  };
  append(task_classifier);
  for (const auto& c : sensitive_classifiers) append(c);
  return out;
}

AuxiliaryHead build_auxiliary_head(std::size_t representation_dim,
                                   std::size_t input_dim,
                                   std::size_t task_classes,
                                   std::span<const int> sensitive_attributes,
                                   std::span<const int> sensitive_classes,
                                   const estimators::FitConfig& capacity,
                                   std::mt19937_64& rng) {
  require(sensitive_attributes.size() == sensitive_classes.size(),
          ErrorCode::kDimensionMismatch,
          "one class count per sensitive attribute required");
  AuxiliaryHead head;
  head.sensitive_attributes.assign(sensitive_attributes.begin(),
                                   sensitive_attributes.end());
  head.decoder = nn::Mlp::make(
      estimators::head_widths(capacity, representation_dim, input_dim),
      capacity.activation);
  head.decoder.init(rng);
  head.task_classifier = nn::Mlp::make(
      estimators::head_widths(capacity, representation_dim, task_classes),
      capacity.activation);
  head.task_classifier.init(rng, /*zero_output_layer=*/true);
  for (int classes : sensitive_classes) {
    nn::Mlp c = nn::Mlp::make(
        estimators::head_widths(capacity, representation_dim, classes),
        capacity.activation);
    c.init(rng, /*zero_output_layer=*/true);
    head.sensitive_classifiers.push_back(std::move(c));
  }
  return head;
}

void save_checkpoint(const SplitModel& model, const std::filesystem::path& path,
                     const nlohmann::json& extra) {
  ParameterContainer c;
  c.header = {{"kind", "split_model"},
              {"format_version", kCheckpointFormatVersion},
              {"layer_spec", model.layer_spec()},
              {"split_index", model.split_index},
              {"extra", extra}};
  c.params = to_f32(model.flat());
  write_container(path, c);
}

SplitModel load_checkpoint(const std::filesystem::path& path,
                           nlohmann::json* extra) {
  const ParameterContainer c = read_container(path);
  try {
    require(c.header.at("kind") == "split_model", ErrorCode::kMalformed,
            path.string() + " does not hold a split model");
    if (c.header.at("format_version").get<int>() != kCheckpointFormatVersion) {
      fail(ErrorCode::kVersion, "unsupported checkpoint format_version");
    }
    const nn::Mlp full = nn::Mlp::from_layer_spec(c.header.at("layer_spec"));
    const std::size_t split = c.header.at("split_index").get<std::size_t>();
    require(split >= 1 && split < full.layers().size(), ErrorCode::kMalformed,
            "checkpoint split_index out of range");
    SplitModel model{
        nn::Mlp({full.layers().begin(), full.layers().begin() + split}),
        nn::Mlp({full.layers().begin() + split, full.layers().end()}), split};
    require(c.params.size() == model.param_count(), ErrorCode::kMalformed,
            "checkpoint parameter count does not match layer_spec");
    model.set_flat(to_f64(c.params));
    if (extra != nullptr) *extra = c.header.at("extra");
    return model;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("checkpoint header: ") + e.what());
  }
}

void save_auxiliary(const AuxiliaryHead& head,
                    const std::filesystem::path& path) {
  nlohmann::json sensitive = nlohmann::json::array();
  for (const auto& c : head.sensitive_classifiers) {
    sensitive.push_back(c.layer_spec());
  }
  ParameterContainer c;
  c.header = {{"kind", "auxiliary_head"},
              {"format_version", kCheckpointFormatVersion},
              {"decoder", head.decoder.layer_spec()},
              {"task_classifier", head.task_classifier.layer_spec()},
              {"sensitive_classifiers", sensitive},
              {"sensitive_attributes", head.sensitive_attributes}};
  c.params = to_f32(head.flat());
  write_container(path, c);
}

AuxiliaryHead load_auxiliary(const std::filesystem::path& path) {
  const ParameterContainer c = read_container(path);
  try {
    require(c.header.at("kind") == "auxiliary_head", ErrorCode::kMalformed,
            path.string() + " does not hold an auxiliary head");
    AuxiliaryHead head;
    head.decoder = nn::Mlp::from_layer_spec(c.header.at("decoder"));
    head.task_classifier =
        nn::Mlp::from_layer_spec(c.header.at("task_classifier"));
    for (const auto& spec : c.header.at("sensitive_classifiers")) {
      head.sensitive_classifiers.push_back(nn::Mlp::from_layer_spec(spec));
    }
    head.sensitive_attributes =
        c.header.at("sensitive_attributes").get<std::vector<int>>();
    require(c.params.size() == head.param_count(), ErrorCode::kMalformed,
            "auxiliary parameter count does not match its header");
    std::size_t pos = 0;
    auto take = [&](nn::Mlp& m) {
      const std::size_t n = m.param_count();
      m.set_flat(to_f64(std::span<const float>(c.params).subspan(pos, n)));
      pos += n;
    };
    take(head.decoder);
    take(head.task_classifier);
    for (auto& m : head.sensitive_classifiers) take(m);
    return head;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("auxiliary header: ") + e.what());
  }
}

}  // namespace vunlearn::trainer
