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

#include "vunlearn/oracle/factor_system.h"

#include <cmath>
#include <fstream>

#include "json.hpp"
#include "vunlearn/common/container.h"
#include "vunlearn/common/error.h"

namespace vunlearn::oracle {
namespace {

constexpr int kFixtureVersion = 1;

VarSet factor_inputs(std::size_t k) {
  VarSet v{"y", "r"};
  for (std::size_t i = 0; i < k; ++i) v.push_back(sensitive_info_axis(i));
  return v;
}

}  // namespace

std::string sensitive_info_axis(std::size_t i) {
  return "s" + std::to_string(i);
}
std::string sensitive_label_axis(std::size_t i) {
  return "z" + std::to_string(i);
}

std::size_t FactorSystem::sensitive_count() const {
  const auto& axes = factor_joint.axes();
  return axes.size() >= 2 ? (axes.size() - 2) / 2 : 0;
}

std::size_t FactorSystem::factor_input_cardinality() const {
  std::size_t card = 1;
  for (const auto& v : factor_inputs(sensitive_count())) {
    card *= factor_joint.axes()[factor_joint.axis_index(v)].cardinality;
  }
  return card;
}

FactorSystem make_factor_system(std::vector<double> y_marginal,
                                std::vector<double> r_marginal,
                                std::vector<SensitivePair> sensitive,
                                DiscreteChannel x_channel,
                                DiscreteChannel h_channel) {
  std::vector<Axis> axes{{"y", y_marginal.size()}, {"r", r_marginal.size()}};
  for (std::size_t i = 0; i < sensitive.size(); ++i) {
    require(sensitive[i].z_to_s.input_cardinality() ==
                sensitive[i].z_marginal.size(),
            ErrorCode::kDimensionMismatch,
            "z->s channel input does not match |z" + std::to_string(i) + "|");
    axes.push_back({sensitive_info_axis(i),
                    sensitive[i].z_to_s.output_cardinality()});
  }
  for (std::size_t i = 0; i < sensitive.size(); ++i) {
    axes.push_back({sensitive_label_axis(i), sensitive[i].z_marginal.size()});
  }
  std::size_t cells = 1;
  for (const Axis& a : axes) {
    if (cells > kMaxCells / std::max<std::size_t>(a.cardinality, 1)) {
      fail(ErrorCode::kSize, "factor joint exceeds the cell cap");
    }
    cells *= a.cardinality;
  }

  const std::size_t k = sensitive.size();
  std::vector<double> probs(cells);
  std::vector<std::size_t> index(axes.size(), 0);
  for (std::size_t flat = 0; flat < cells; ++flat) {
    double p = y_marginal[index[0]] * r_marginal[index[1]];
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t s = index[2 + i];
      const std::size_t z = index[2 + k + i];
      p *= sensitive[i].z_marginal[z] * sensitive[i].z_to_s(z, s);
    }
    probs[flat] = p;
    for (std::size_t a = axes.size(); a-- > 0;) {
      if (++index[a] < axes[a].cardinality) break;
      index[a] = 0;
    }
  }
  return FactorSystem{DiscreteJoint(std::move(axes), std::move(probs)),
                      std::move(x_channel), std::move(h_channel)};
}

void validate(const FactorSystem& system) {
  const DiscreteJoint& joint = system.factor_joint;
  const auto& axes = joint.axes();
  require(axes.size() >= 2 && axes.size() % 2 == 0, ErrorCode::kInvariant,
          "factor joint must hold y, r and matched (s_i, z_i) axes");
  const std::size_t k = system.sensitive_count();
  require(joint.has_axis("y") && joint.has_axis("r"), ErrorCode::kInvariant,
          "factor joint is missing the y or r axis");
  for (std::size_t i = 0; i < k; ++i) {
    require(joint.has_axis(sensitive_info_axis(i)) &&
                joint.has_axis(sensitive_label_axis(i)),
            ErrorCode::kInvariant,
            "factor joint is missing s" + std::to_string(i) + " or z" +
                std::to_string(i));
  }
  require(system.x_channel.input_cardinality() ==
              system.factor_input_cardinality(),
          ErrorCode::kDimensionMismatch,
          "x channel input cardinality does not match |y|·|r|·Π|s_i|");
  require(system.h_channel.input_cardinality() ==
              system.x_channel.output_cardinality(),
          ErrorCode::kDimensionMismatch,
          "h channel input cardinality does not match |x|");

  // Mutual independence of y, r, s_i: total correlation vanishes.
  const VarSet inputs = factor_inputs(k);
  double total_correlation = -entropy(joint, inputs);
  for (const auto& v : inputs) total_correlation += entropy(joint, {v});
  require(total_correlation <= kChainTolerance, ErrorCode::kInvariant,
          "factors y, r, s are not mutually independent (total correlation " +
              std::to_string(total_correlation) + " nats)");

  // z_i reaches the rest of the system only through s_i.
  for (std::size_t i = 0; i < k; ++i) {
    VarSet others{"y", "r"};
    for (std::size_t j = 0; j < k; ++j) {
      if (j != i) others.push_back(sensitive_info_axis(j));
    }
    const double leak = conditional_mutual_information(
        joint, {sensitive_label_axis(i)}, others, {sensitive_info_axis(i)});
    require(leak <= kChainTolerance, ErrorCode::kInvariant,
            "z" + std::to_string(i) + " is not a Markov parent of s" +
                std::to_string(i) + " only");
  }
}

DiscreteJoint compose_markov_chain(const FactorSystem& system) {
  const DiscreteJoint& joint = system.factor_joint;
  require(system.x_channel.input_cardinality() ==
              system.factor_input_cardinality(),
          ErrorCode::kDimensionMismatch,
          "x channel input cardinality does not match factor space");
  require(system.h_channel.input_cardinality() ==
              system.x_channel.output_cardinality(),
          ErrorCode::kDimensionMismatch,
          "h channel input cardinality does not match |x|");
  const std::size_t nx = system.x_channel.output_cardinality();
  const std::size_t nh = system.h_channel.output_cardinality();
  if (joint.size() > kMaxCells / nx || joint.size() * nx > kMaxCells / nh) {
    fail(ErrorCode::kSize, "composed chain exceeds the cell cap");
  }

  const VarSet inputs = factor_inputs(system.sensitive_count());
  std::vector<std::size_t> input_pos;
  for (const auto& v : inputs) input_pos.push_back(joint.axis_index(v));

  std::vector<Axis> axes = joint.axes();
  axes.push_back({"x", nx});
  axes.push_back({"h", nh});
  std::vector<double> probs(joint.size() * nx * nh, 0.0);
  for (std::size_t flat = 0; flat < joint.size(); ++flat) {
    const double p = joint.probs()[flat];
    if (p == 0.0) continue;
    const auto index = joint.unflatten(flat);
    std::size_t in = 0;
    for (std::size_t pos : input_pos) {
      in = in * joint.axes()[pos].cardinality + index[pos];
    }
    for (std::size_t x = 0; x < nx; ++x) {
      const double px = p * system.x_channel(in, x);
      if (px == 0.0) continue;
      for (std::size_t h = 0; h < nh; ++h) {
        probs[(flat * nx + x) * nh + h] = px * system.h_channel(x, h);
      }
    }
  }
  return DiscreteJoint(std::move(axes), std::move(probs));
}

ChainCheck verify_detachment_chain(const FactorSystem& system) {
  validate(system);
  const DiscreteJoint chain = compose_markov_chain(system);
  ChainCheck c;
  c.lhs = mutual_information(chain, {"h"}, {"r"});
  for (std::size_t i = 0; i < system.sensitive_count(); ++i) {
    c.lhs += mutual_information(chain, {"h"}, {sensitive_info_axis(i)});
  }
  c.rhs = mutual_information(chain, {"h"}, {"x"}) -
          mutual_information(chain, {"h"}, {"y"});
  c.slack = c.rhs - c.lhs;
  c.holds = c.lhs <= c.rhs + kChainTolerance;
  return c;
}

std::vector<double> random_simplex(std::mt19937_64& rng, std::size_t k) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> w(k);
  double total = 0.0;
  for (double& v : w) {
    v = expo(rng) + 1e-6;
    total += v;
  }
  for (double& v : w) v /= total;
  return w;
}

DiscreteChannel random_channel(std::mt19937_64& rng, std::size_t in,
                               std::size_t out) {
  std::vector<double> t;
  t.reserve(in * out);
  for (std::size_t i = 0; i < in; ++i) {
    const auto row = random_simplex(rng, out);
    t.insert(t.end(), row.begin(), row.end());
  }
  return DiscreteChannel(in, out, std::move(t));
}

FactorSystem random_factor_system(std::mt19937_64& rng,
                                  const RandomSystemOptions& options) {
  require(options.max_cardinality >= 2, ErrorCode::kPrecondition,
          "max_cardinality must be at least 2");
  std::uniform_int_distribution<std::size_t> card(2, options.max_cardinality);
  std::uniform_int_distribution<std::size_t> x_card(
      2, std::max<std::size_t>(2, options.max_x_cardinality));
  std::uniform_int_distribution<std::size_t> h_card(
      2, std::max<std::size_t>(2, options.max_h_cardinality));
  std::bernoulli_distribution deterministic(
      options.deterministic_channel_prob);

  auto make_channel = [&](std::size_t in, std::size_t out) {
    if (deterministic(rng)) {
      std::uniform_int_distribution<std::size_t> target(0, out - 1);
      std::vector<std::size_t> map(in);
      for (auto& m : map) m = target(rng);
      return DiscreteChannel::deterministic(map, out);
    }
    return random_channel(rng, in, out);
  };

  const std::size_t ny = card(rng);
  const std::size_t nr = card(rng);
  std::vector<double> y = random_simplex(rng, ny);
  std::vector<double> r = random_simplex(rng, nr);
  std::vector<SensitivePair> sensitive;
  std::size_t inputs = ny * nr;
  for (std::size_t i = 0; i < options.sensitive_count; ++i) {
    const std::size_t nz = card(rng);
    const std::size_t ns = card(rng);
    sensitive.push_back({random_simplex(rng, nz), make_channel(nz, ns)});
    inputs *= ns;
  }
  const std::size_t nx = x_card(rng);
  const std::size_t nh = h_card(rng);
  DiscreteChannel xc = make_channel(inputs, nx);
  DiscreteChannel hc = make_channel(nx, nh);
  return make_factor_system(std::move(y), std::move(r), std::move(sensitive),
                            std::move(xc), std::move(hc));
}

void save_factor_system(const FactorSystem& system,
                        const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::uint8_t> data;
  for (double p : system.factor_joint.probs()) append_f64(data, p);
  for (double p : system.x_channel.transition()) append_f64(data, p);
  for (double p : system.h_channel.transition()) append_f64(data, p);

  nlohmann::json meta;
  meta["format_version"] = kFixtureVersion;
  meta["kind"] = "factor_system";
  nlohmann::json axes = nlohmann::json::array();
  for (const Axis& a : system.factor_joint.axes()) {
    axes.push_back({{"name", a.name}, {"cardinality", a.cardinality}});
  }
  meta["axes"] = axes;
  meta["x_channel"] = {{"input", system.x_channel.input_cardinality()},
                       {"output", system.x_channel.output_cardinality()}};
  meta["h_channel"] = {{"input", system.h_channel.input_cardinality()},
                       {"output", system.h_channel.output_cardinality()}};
  meta["payload_crc32"] = crc32_of(data);
  write_file(dir / "data.bin", data);
  std::ofstream(dir / "meta.json") << meta.dump(2) << "\n";
}

FactorSystem load_factor_system(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    std::ifstream in(dir / "meta.json");
    if (!in) fail(ErrorCode::kIo, "cannot open " + (dir / "meta.json").string());
    meta = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("meta.json: ") + e.what());
  }
  try {
    if (meta.at("format_version").get<int>() != kFixtureVersion) {
      fail(ErrorCode::kVersion, "unsupported fixture format_version");
    }
    std::vector<Axis> axes;
    std::size_t cells = 1;
    for (const auto& a : meta.at("axes")) {
      axes.push_back({a.at("name").get<std::string>(),
                      a.at("cardinality").get<std::size_t>()});
      cells *= axes.back().cardinality;
    }
    const std::size_t xin = meta.at("x_channel").at("input");
    const std::size_t xout = meta.at("x_channel").at("output");
    const std::size_t hin = meta.at("h_channel").at("input");
    const std::size_t hout = meta.at("h_channel").at("output");
    const auto data = read_file(dir / "data.bin");
    const std::size_t expected = (cells + xin * xout + hin * hout) * 8;
    if (data.size() < expected) {
      fail(ErrorCode::kTruncated, "fixture payload truncated");
    }
    if (data.size() != expected) {
      fail(ErrorCode::kMalformed, "fixture payload has trailing bytes");
    }
    if (crc32_of(data) != meta.at("payload_crc32").get<std::uint32_t>()) {
      fail(ErrorCode::kChecksum, "fixture checksum mismatch");
    }
    std::size_t pos = 0;
    auto take = [&](std::size_t count) {
      std::vector<double> v(count);
      for (auto& d : v) {
        d = read_f64(data, pos);
        pos += 8;
      }
      return v;
    };
    auto joint = take(cells);
    auto xt = take(xin * xout);
    auto ht = take(hin * hout);
    return FactorSystem{DiscreteJoint(std::move(axes), std::move(joint)),
                        DiscreteChannel(xin, xout, std::move(xt)),
                        DiscreteChannel(hin, hout, std::move(ht))};
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("meta.json: ") + e.what());
  }
}

}  // namespace vunlearn::oracle
