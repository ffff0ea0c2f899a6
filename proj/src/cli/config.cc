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

#include "vunlearn/cli/config.h"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "vunlearn/common/container.h"
#include "vunlearn/common/error.h"

namespace vunlearn::cli {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const std::string& expected) {
  throw Error(ErrorCode::kConfig,
              "config key '" + key + "': expected " + expected + ", got '" +
                  value + "'");
}

template <typename T>
T parse_integer(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto r = std::from_chars(value.data(), end, out);
  if (r.ec != std::errc() || r.ptr != end) bad_value(key, value, "an integer");
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used == value.size()) return v;
  } catch (const std::exception&) {
  }
  bad_value(key, value, "a number");
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  bad_value(key, value, "true or false");
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

template <typename T, typename F>
std::vector<T> parse_list(const std::string& key, const std::string& value,
                          F parse_one) {
  std::vector<T> out;
  for (const auto& item : split_list(value)) {
    if (item.empty()) bad_value(key, value, "a comma-separated list");
    out.push_back(parse_one(key, item));
  }
  if (out.empty()) bad_value(key, value, "a non-empty list");
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "n", "task_classes", "sensitive_classes", "nuisance_dim",
      "nuisance_kind", "nuisance_cardinality", "embed_dim_per_factor",
      "mixing", "mixing_seed", "noise_std", "dataset",
      "hidden", "activation", "representation_activation", "split_index",
      "alpha", "beta", "gamma", "sensitive_attributes", "epochs",
      "batch_size", "lr_main", "lr_front", "lr_aux", "mode",
      "refresh_period", "inner_steps", "refit_steps", "max_grad_norm",
      "anneal", "attribute", "attacker_steps", "attacker_budget",
      "seed", "out"};
  return keys;
}

}  // namespace

KeyValues parse_key_values(const std::string& text) {
  KeyValues out;
  std::stringstream ss(text);
  std::string line;
  int number = 0;
  while (std::getline(ss, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorCode::kConfig,
            "config line " + std::to_string(number) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    require(!key.empty(), ErrorCode::kConfig,
            "config line " + std::to_string(number) + ": empty key");
    require(out.emplace(key, trim(line.substr(eq + 1))).second,
            ErrorCode::kConfig,
            "config line " + std::to_string(number) + ": repeated key '" +
                key + "'");
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(in.good(), ErrorCode::kIo, "cannot read config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str());
}

KeyValues merge(KeyValues base, const KeyValues& overrides) {
  for (const auto& [k, v] : overrides) base[k] = v;
  return base;
}

std::string config_hash(const KeyValues& values) {
  std::string canonical;
  for (const auto& [k, v] : values) {
    if (k == "seed" || k == "out" || k == "mode") continue;
    canonical += k + "=" + v + "\n";
  }
  const std::span<const std::uint8_t> bytes(
      reinterpret_cast<const std::uint8_t*>(canonical.data()),
      canonical.size());
  char buf[9];
  std::snprintf(buf, sizeof buf, "%08x", crc32_of(bytes));
  return buf;
}

RunConfig to_run_config(const KeyValues& values) {
  for (const auto& [k, v] : values) {
    require(known_keys().count(k) == 1, ErrorCode::kConfig,
            "unknown config key '" + k + "'");
  }
  auto get = [&](const std::string& key) -> const std::string* {
    const auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  auto need = [&](const std::string& key) -> const std::string& {
    const auto* v = get(key);
    require(v != nullptr, ErrorCode::kConfig,
            "missing required config key '" + key + "'");
    return *v;
  };
  auto with = [&](const std::string& key,
                  const std::function<void(const std::string&)>& apply) {
    if (const auto* v = get(key)) apply(*v);
  };
  auto as_int = [](const std::string& k, const std::string& v) {
    return parse_integer<int>(k, v);
  };

  RunConfig c;
  c.hash = config_hash(values);
  c.seed = parse_integer<std::uint64_t>("seed", need("seed"));
  c.n = parse_integer<std::size_t>("n", need("n"));

  auto& g = c.generator;
  g.seed = c.seed;
  g.task_classes = as_int("task_classes", need("task_classes"));
  g.sensitive_classes =
      parse_list<int>("sensitive_classes", need("sensitive_classes"), as_int);
  with("nuisance_dim", [&](auto& v) { g.nuisance_dim = as_int("nuisance_dim", v); });
  with("nuisance_kind", [&](auto& v) {
    if (v == "discrete") {
      g.nuisance_kind = synthgen::NuisanceKind::kDiscrete;
    } else if (v == "continuous-uniform") {
      g.nuisance_kind = synthgen::NuisanceKind::kContinuousUniform;
    } else {
      bad_value("nuisance_kind", v, "discrete or continuous-uniform");
    }
  });
  with("nuisance_cardinality", [&](auto& v) {
    g.nuisance_cardinality = as_int("nuisance_cardinality", v);
  });
  with("embed_dim_per_factor", [&](auto& v) {
    g.embed_dim_per_factor = as_int("embed_dim_per_factor", v);
  });
  with("mixing", [&](auto& v) {
    if (v == "identity") {
      g.mixing = synthgen::Mixing::kIdentity;
    } else if (v == "fixed-orthogonal") {
      g.mixing = synthgen::Mixing::kFixedOrthogonal;
    } else {
      bad_value("mixing", v, "identity or fixed-orthogonal");
    }
  });
  with("mixing_seed", [&](auto& v) {
    g.mixing_seed = parse_integer<std::uint64_t>("mixing_seed", v);
  });
  with("noise_std", [&](auto& v) { g.noise_std = parse_real("noise_std", v); });
  with("dataset", [&](auto& v) { c.dataset = v; });

  auto& m = c.model;
  with("hidden", [&](auto& v) {
    m.hidden = parse_list<std::size_t>("hidden", v, [](auto& k, auto& s) {
      return parse_integer<std::size_t>(k, s);
    });
  });
  auto activation = [](const std::string& key, const std::string& v) {
    try {
      return nn::parse_activation(v);
    } catch (const Error&) {
      bad_value(key, v, "identity, tanh or relu");
    }
  };
  with("activation", [&](auto& v) { m.activation = activation("activation", v); });
  with("representation_activation", [&](auto& v) {
    m.representation_activation = activation("representation_activation", v);
  });
  with("split_index", [&](auto& v) {
    m.split_index = parse_integer<std::size_t>("split_index", v);
  });

  auto& t = c.train;
  t.seed = c.seed;
  with("alpha", [&](auto& v) { t.alpha = parse_real("alpha", v); });
  with("beta", [&](auto& v) { t.beta = parse_real("beta", v); });
  with("gamma", [&](auto& v) { t.gammas = parse_list<double>("gamma", v, parse_real); });
  with("sensitive_attributes", [&](auto& v) {
    t.sensitive_attributes = parse_list<int>("sensitive_attributes", v, as_int);
  });
  with("epochs", [&](auto& v) { t.epochs = as_int("epochs", v); });
  with("batch_size", [&](auto& v) {
    t.batch_size = parse_integer<std::size_t>("batch_size", v);
  });
  with("lr_main", [&](auto& v) { t.lr_main = parse_real("lr_main", v); });
  with("lr_front", [&](auto& v) { t.lr_front = parse_real("lr_front", v); });
  with("lr_aux", [&](auto& v) { t.lr_aux = parse_real("lr_aux", v); });
  with("mode", [&](auto& v) {
    try {
      t.mode = trainer::parse_mode(v);
    } catch (const Error&) {
      bad_value("mode", v, "sequential or parallel");
    }
  });
  with("refresh_period", [&](auto& v) { t.refresh_period = as_int("refresh_period", v); });
  with("inner_steps", [&](auto& v) { t.inner_steps = as_int("inner_steps", v); });
  with("refit_steps", [&](auto& v) { t.refit_steps = as_int("refit_steps", v); });
  with("max_grad_norm", [&](auto& v) {
    t.max_grad_norm = parse_real("max_grad_norm", v);
  });
  with("anneal", [&](auto& v) { t.anneal = parse_bool("anneal", v); });
  // One gamma broadcasts over every sensitive attribute.
  if (t.gammas.size() == 1 && t.sensitive_attributes.size() > 1) {
    t.gammas.assign(t.sensitive_attributes.size(), t.gammas[0]);
  }

  c.attribute = t.sensitive_attributes.empty() ? 0 : t.sensitive_attributes[0];
  with("attribute", [&](auto& v) { c.attribute = as_int("attribute", v); });
  c.attacker.fit.seed = c.seed;
  with("attacker_steps", [&](auto& v) {
    c.attacker.fit.steps = as_int("attacker_steps", v);
  });
  with("attacker_budget", [&](auto& v) {
    c.attacker.data_budget = parse_real("attacker_budget", v);
  });
  with("out", [&](auto& v) { c.out = v; });
  return c;
}

std::filesystem::path run_directory(const RunConfig& config) {
  if (config.out) return *config.out;
  return std::filesystem::path("runs") /
         (config.hash + "-" + std::to_string(config.seed));
}

std::filesystem::path dataset_directory(const RunConfig& config) {
  return config.dataset ? *config.dataset : run_directory(config) / "dataset";
}

nlohmann::json config_echo(const RunConfig& config) {
  const auto& t = config.train;
  return {{"config_hash", config.hash},
          {"n", config.n},
          {"alpha", t.alpha},
          {"beta", t.beta},
          {"gammas", t.gammas},
          {"sensitive_attributes", t.sensitive_attributes},
          {"attribute", config.attribute},
          {"epochs", t.epochs},
          {"batch_size", t.batch_size},
          {"lr_main", t.lr_main},
          {"lr_aux", t.lr_aux},
          {"mode", trainer::mode_name(t.mode)},
          {"hidden", config.model.hidden},
          {"attacker_steps", config.attacker.fit.steps}};
}

}  // namespace vunlearn::cli
