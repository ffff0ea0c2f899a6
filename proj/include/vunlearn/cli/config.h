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

#ifndef VUNLEARN_CLI_CONFIG_H_
#define VUNLEARN_CLI_CONFIG_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"
#include "vunlearn/evaluator/evaluator.h"
#include "vunlearn/synthgen/dataset.h"
#include "vunlearn/trainer/model.h"
#include "vunlearn/trainer/trainer.h"

namespace vunlearn::cli {

// Flat key=value pairs. '#' starts a comment; blank lines are ignored.
using KeyValues = std::map<std::string, std::string>;

// Throws kConfig on a malformed line, an empty key, or a repeated key.
KeyValues parse_key_values(const std::string& text);
KeyValues read_key_values(const std::filesystem::path& path);

// Inserts or replaces `overrides` in `base`.
KeyValues merge(KeyValues base, const KeyValues& overrides);

struct RunConfig {
  synthgen::GeneratorSpec generator;
  std::size_t n = 0;
  std::optional<std::filesystem::path> dataset;
  trainer::ModelSpec model;
  trainer::TrainConfig train;
  evaluator::AttackerConfig attacker;
  int attribute = 0;  // attribute scored by evaluate
  std::uint64_t seed = 0;
  std::optional<std::filesystem::path> out;
  std::string hash;  // of every key except seed, out and mode
};

// Unknown keys, missing required keys (n, task_classes, sensitive_classes,
// seed) and unparsable values are kConfig errors naming the key.
RunConfig to_run_config(const KeyValues& values);

// Keys that cannot change results (seed, out, mode) are left out.
std::string config_hash(const KeyValues& values);

// out if set, else runs/<hash>-<seed>.
std::filesystem::path run_directory(const RunConfig& config);
std::filesystem::path dataset_directory(const RunConfig& config);

// Typed echo stored in evaluation reports.
nlohmann::json config_echo(const RunConfig& config);

}  // namespace vunlearn::cli

#endif  // VUNLEARN_CLI_CONFIG_H_
