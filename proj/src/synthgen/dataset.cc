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

#include "vunlearn/synthgen/dataset.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "json.hpp"
#include "vunlearn/common/container.h"
#include "vunlearn/common/error.h"

namespace vunlearn::synthgen {
namespace {

constexpr std::uint64_t kNoiseStream = 0x6e6f697365ULL;
constexpr std::uint64_t kSplitStream = 0x73706c6974ULL;
constexpr double kTrainFraction = 0.6;
constexpr double kValidationFraction = 0.2;

int bits_for(int classes) {
  return std::max(1, static_cast<int>(std::bit_width(
                         static_cast<unsigned>(classes - 1))));
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(salt),
                    static_cast<std::uint32_t>(salt >> 32)};
  return std::mt19937_64(seq);
}

Eigen::MatrixXd orthogonal_mixing(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(dim, dim);
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    for (Eigen::Index j = 0; j < g.cols(); ++j) g(i, j) = gauss(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
  // Fix column signs so Q is a function of the seed alone.
  const Eigen::MatrixXd r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < q.cols(); ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

Split make_split(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = stream(seed, kSplitStream);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train =
      static_cast<std::size_t>(std::llround(kTrainFraction * n));
  const auto n_val = std::min(
      n - n_train,
      static_cast<std::size_t>(std::llround(kValidationFraction * n)));
  Split s;
  s.train.assign(order.begin(), order.begin() + n_train);
  s.validation.assign(order.begin() + n_train,
                      order.begin() + n_train + n_val);
  s.test.assign(order.begin() + n_train + n_val, order.end());
  std::sort(s.train.begin(), s.train.end());
  std::sort(s.validation.begin(), s.validation.end());
  std::sort(s.test.begin(), s.test.end());
  return s;
}

FactorDataset generate_impl(const GeneratorSpec& spec, std::size_t n,
                            const std::vector<int>& ablated) {
  validate(spec);
  require(n >= 1, ErrorCode::kPrecondition, "n must be >= 1");
  const std::size_t dim = observation_dim(spec);
  const int e = spec.embed_dim_per_factor;
  const bool discrete = spec.nuisance_kind == NuisanceKind::kDiscrete;
  const std::size_t nz = spec.sensitive_classes.size();

  Eigen::MatrixXd mixing;
  if (spec.mixing == Mixing::kFixedOrthogonal) {
    mixing = orthogonal_mixing(dim, spec.mixing_seed);
  }

  std::mt19937_64 factors(spec.seed);
  auto noise = stream(spec.seed, kNoiseStream);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<float> unit(-1.0f, 1.0f);

  FactorDataset ds;
  ds.spec = spec;
  ds.ablated = ablated;
  std::sort(ds.ablated.begin(), ds.ablated.end());
  ds.samples.resize(n);
  Eigen::VectorXd u(dim);
  for (FactorSample& s : ds.samples) {
    s.y = std::uniform_int_distribution<int>(0, spec.task_classes - 1)(factors);
    s.z.resize(nz);
    for (std::size_t i = 0; i < nz; ++i) {
      s.z[i] = std::uniform_int_distribution<int>(
          0, spec.sensitive_classes[i] - 1)(factors);
    }
    if (discrete) {
      s.r_discrete.resize(spec.nuisance_dim);
      for (auto& r : s.r_discrete) {
        r = std::uniform_int_distribution<int>(
            0, spec.nuisance_cardinality - 1)(factors);
      }
    } else {
      s.r_continuous.resize(spec.nuisance_dim);
      for (auto& r : s.r_continuous) r = unit(factors);
    }

    std::size_t pos = 0;
    auto put_block = [&](int value, int classes) {
      for (float v : encode_factor(value, classes, e)) u(pos++) = v;
    };
    put_block(s.y, spec.task_classes);
    for (std::size_t i = 0; i < nz; ++i) {
      const bool off = std::find(ablated.begin(), ablated.end(),
                                 static_cast<int>(i)) != ablated.end();
      put_block(off ? 0 : s.z[i], spec.sensitive_classes[i]);
    }
    if (discrete) {
      for (int r : s.r_discrete) put_block(r, spec.nuisance_cardinality);
    } else {
      for (float r : s.r_continuous) u(pos++) = r;
    }

    Eigen::VectorXd x = spec.mixing == Mixing::kFixedOrthogonal
                            ? Eigen::VectorXd(mixing * u)
                            : u;
    if (spec.noise_std > 0.0) {
      for (Eigen::Index j = 0; j < x.size(); ++j) {
        x(j) += spec.noise_std * gauss(noise);
      }
    }
    s.x.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) s.x[j] = static_cast<float>(x(j));
  }
  ds.split = make_split(n, spec.seed);
  return ds;
}

std::string nuisance_kind_name(NuisanceKind k) {
  return k == NuisanceKind::kDiscrete ? "discrete" : "continuous-uniform";
}

std::string mixing_name(Mixing m) {
  return m == Mixing::kIdentity ? "identity" : "fixed-orthogonal";
}

std::vector<std::uint8_t> encode_payload(const FactorDataset& ds) {
  std::vector<std::uint8_t> out;
  const std::size_t n = ds.size();
  const std::size_t dim = ds.x_dim();
  out.reserve(n * (dim * 4 + 4 * (1 + ds.spec.sensitive_classes.size()) +
                   4 * ds.spec.nuisance_dim));
  for (const auto& s : ds.samples) {
    for (float v : s.x) append_f32(out, v);
  }
  for (const auto& s : ds.samples) append_i32(out, s.y);
  for (std::size_t i = 0; i < ds.spec.sensitive_classes.size(); ++i) {
    for (const auto& s : ds.samples) append_i32(out, s.z[i]);
  }
  for (const auto& s : ds.samples) {
    for (auto r : s.r_discrete) append_i32(out, r);
    for (auto r : s.r_continuous) append_f32(out, r);
  }
  return out;
}

nlohmann::json spec_to_json(const GeneratorSpec& spec) {
  return {{"task_classes", spec.task_classes},
          {"sensitive_classes", spec.sensitive_classes},
          {"nuisance_dim", spec.nuisance_dim},
          {"nuisance_kind", nuisance_kind_name(spec.nuisance_kind)},
          {"nuisance_cardinality", spec.nuisance_cardinality},
          {"embed_dim_per_factor", spec.embed_dim_per_factor},
          {"mixing", mixing_name(spec.mixing)},
          {"mixing_seed", spec.mixing_seed},
          {"noise_std", spec.noise_std},
          {"seed", spec.seed}};
}

GeneratorSpec spec_from_json(const nlohmann::json& j) {
  GeneratorSpec spec;
  spec.task_classes = j.at("task_classes").get<int>();
  spec.sensitive_classes = j.at("sensitive_classes").get<std::vector<int>>();
  spec.nuisance_dim = j.at("nuisance_dim").get<int>();
  const auto kind = j.at("nuisance_kind").get<std::string>();
  if (kind == "discrete") {
    spec.nuisance_kind = NuisanceKind::kDiscrete;
  } else if (kind == "continuous-uniform") {
    spec.nuisance_kind = NuisanceKind::kContinuousUniform;
  } else {
    fail(ErrorCode::kMalformed, "unknown nuisance_kind '" + kind + "'");
  }
  spec.nuisance_cardinality = j.at("nuisance_cardinality").get<int>();
  spec.embed_dim_per_factor = j.at("embed_dim_per_factor").get<int>();
  const auto mixing = j.at("mixing").get<std::string>();
  if (mixing == "identity") {
    spec.mixing = Mixing::kIdentity;
  } else if (mixing == "fixed-orthogonal") {
    spec.mixing = Mixing::kFixedOrthogonal;
  } else {
    fail(ErrorCode::kMalformed, "unknown mixing '" + mixing + "'");
  }
  spec.mixing_seed = j.at("mixing_seed").get<std::uint64_t>();
  spec.noise_std = j.at("noise_std").get<double>();
  spec.seed = j.at("seed").get<std::uint64_t>();
  return spec;
}

void check_split(const Split& split, std::size_t n) {
  std::vector<char> seen(n, 0);
  for (const auto* part : {&split.train, &split.validation, &split.test}) {
    for (std::size_t i : *part) {
      require(i < n && !seen[i], ErrorCode::kMalformed,
              "split index sets must be disjoint and in range");
      seen[i] = 1;
    }
  }
  require(std::all_of(seen.begin(), seen.end(), [](char c) { return c; }),
          ErrorCode::kMalformed, "split index sets must cover all samples");
}

}  // namespace

void validate(const GeneratorSpec& spec) {
  require(spec.task_classes >= 2, ErrorCode::kConfig,
          "task_classes must be >= 2");
  require(!spec.sensitive_classes.empty(), ErrorCode::kConfig,
          "sensitive_classes must list at least one attribute");
  int max_classes = spec.task_classes;
  for (std::size_t i = 0; i < spec.sensitive_classes.size(); ++i) {
    require(spec.sensitive_classes[i] >= 2, ErrorCode::kConfig,
            "sensitive_classes[" + std::to_string(i) + "] must be >= 2");
    max_classes = std::max(max_classes, spec.sensitive_classes[i]);
  }
  require(spec.nuisance_dim >= 0, ErrorCode::kConfig,
          "nuisance_dim must be >= 0");
  if (spec.nuisance_kind == NuisanceKind::kDiscrete && spec.nuisance_dim > 0) {
    require(spec.nuisance_cardinality >= 2, ErrorCode::kConfig,
            "nuisance_cardinality must be >= 2");
    max_classes = std::max(max_classes, spec.nuisance_cardinality);
  }
  require(spec.embed_dim_per_factor >= 1, ErrorCode::kConfig,
          "embed_dim_per_factor must be >= 1");
  require(spec.embed_dim_per_factor >= bits_for(max_classes),
          ErrorCode::kConfig,
          "embed_dim_per_factor must be >= ceil(log2(max class count)) = " +
              std::to_string(bits_for(max_classes)));
  require(std::isfinite(spec.noise_std) && spec.noise_std >= 0.0,
          ErrorCode::kConfig, "noise_std must be finite and >= 0");
}

std::size_t observation_dim(const GeneratorSpec& spec) {
  const std::size_t e = spec.embed_dim_per_factor;
  std::size_t dim = (1 + spec.sensitive_classes.size()) * e;
  if (spec.nuisance_kind == NuisanceKind::kDiscrete) {
    dim += spec.nuisance_dim * e;
  } else {
    dim += spec.nuisance_dim;
  }
  return dim;
}

std::size_t FactorDataset::x_dim() const { return observation_dim(spec); }

std::vector<float> encode_factor(int value, int classes, int width) {
  std::vector<float> block(width);
  if (width >= classes) {
    for (int j = 0; j < width; ++j) {
      block[j] = (j % classes == value) ? 1.0f : -1.0f;
    }
  } else {
    const int nbits = bits_for(classes);
    for (int j = 0; j < width; ++j) {
      block[j] = ((value >> (j % nbits)) & 1) ? 1.0f : -1.0f;
    }
  }
  return block;
}

Eigen::MatrixXd mixing_matrix(const GeneratorSpec& spec) {
  const std::size_t dim = observation_dim(spec);
  if (spec.mixing == Mixing::kIdentity) {
    return Eigen::MatrixXd::Identity(dim, dim);
  }
  return orthogonal_mixing(dim, spec.mixing_seed);
}

BlockRange sensitive_block(const GeneratorSpec& spec, int attribute_index) {
  require(attribute_index >= 0 &&
              attribute_index <
                  static_cast<int>(spec.sensitive_classes.size()),
          ErrorCode::kPrecondition, "attribute_index out of range");
  const std::size_t e = spec.embed_dim_per_factor;
  return {(1 + static_cast<std::size_t>(attribute_index)) * e, e};
}

FactorDataset generate_dataset(const GeneratorSpec& spec, std::size_t n) {
  return generate_impl(spec, n, {});
}

FactorDataset ablate_sensitive(const FactorDataset& dataset,
                               int attribute_index) {
  require(attribute_index >= 0 &&
              attribute_index <
                  static_cast<int>(dataset.spec.sensitive_classes.size()),
          ErrorCode::kPrecondition,
          "attribute_index " + std::to_string(attribute_index) +
              " out of range");
  std::vector<int> ablated = dataset.ablated;
  if (std::find(ablated.begin(), ablated.end(), attribute_index) ==
      ablated.end()) {
    ablated.push_back(attribute_index);
  }
  FactorDataset out = generate_impl(dataset.spec, dataset.size(), ablated);
  if (dataset.swapped_attribute >= 0) {
    out = swap_task_and_sensitive(out, dataset.swapped_attribute);
  }
  return out;
}

FactorDataset swap_task_and_sensitive(const FactorDataset& dataset,
                                      int attribute_index) {
  const auto& classes = dataset.spec.sensitive_classes;
  require(attribute_index >= 0 &&
              attribute_index < static_cast<int>(classes.size()),
          ErrorCode::kPrecondition, "attribute_index out of range");
  require(classes[attribute_index] == dataset.spec.task_classes,
          ErrorCode::kPrecondition,
          "swapped attributes must share a class count");
  FactorDataset out = dataset;
  for (auto& s : out.samples) std::swap(s.y, s.z[attribute_index]);
  out.swapped_attribute =
      dataset.swapped_attribute == attribute_index ? -1 : attribute_index;
  return out;
}

Eigen::MatrixXd features(const FactorDataset& dataset,
                         std::span<const std::size_t> rows) {
  Eigen::MatrixXd m(rows.size(), dataset.x_dim());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& x = dataset.samples.at(rows[i]).x;
    for (std::size_t j = 0; j < x.size(); ++j) m(i, j) = x[j];
  }
  return m;
}

std::vector<std::size_t> all_rows(const FactorDataset& dataset) {
  std::vector<std::size_t> rows(dataset.size());
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  return rows;
}

Eigen::MatrixXd features(const FactorDataset& dataset) {
  return features(dataset, all_rows(dataset));
}

std::vector<int> task_labels(const FactorDataset& dataset,
                             std::span<const std::size_t> rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) out.push_back(dataset.samples.at(r).y);
  return out;
}

std::vector<int> sensitive_labels(const FactorDataset& dataset,
                                  int attribute_index,
                                  std::span<const std::size_t> rows) {
  require(attribute_index >= 0 &&
              attribute_index <
                  static_cast<int>(dataset.spec.sensitive_classes.size()),
          ErrorCode::kPrecondition, "attribute_index out of range");
  std::vector<int> out;
  out.reserve(rows.size());
  for (std::size_t r : rows) {
    out.push_back(dataset.samples.at(r).z[attribute_index]);
  }
  return out;
}

std::uint32_t payload_checksum(const FactorDataset& dataset) {
  return crc32_of(encode_payload(dataset));
}

void save_dataset(const FactorDataset& dataset,
                  const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto payload = encode_payload(dataset);
  nlohmann::json meta;
  meta["format_version"] = kDatasetFormatVersion;
  meta["spec"] = spec_to_json(dataset.spec);
  meta["n"] = dataset.size();
  meta["x_dim"] = dataset.x_dim();
  meta["split"] = {{"train", dataset.split.train},
                   {"validation", dataset.split.validation},
                   {"test", dataset.split.test}};
  meta["ablated"] = dataset.ablated;
  meta["swapped_attribute"] = dataset.swapped_attribute;
  meta["payload_crc32"] = crc32_of(payload);
  write_file(dir / "data.bin", payload);
  std::ofstream out(dir / "meta.json", std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + (dir / "meta.json").string());
  out << meta.dump(2) << "\n";
}

FactorDataset load_dataset(const std::filesystem::path& dir) {
  nlohmann::json meta;
  {
    std::ifstream in(dir / "meta.json");
    if (!in) fail(ErrorCode::kIo, "cannot open " + (dir / "meta.json").string());
    try {
      meta = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kMalformed, std::string("meta.json: ") + e.what());
    }
  }

  FactorDataset ds;
  std::size_t n = 0;
  std::uint32_t expected_crc = 0;
  try {
    if (!meta.is_object() || !meta.contains("format_version")) {
      fail(ErrorCode::kMalformed, "meta.json lacks format_version");
    }
    const int version = meta.at("format_version").get<int>();
    if (version != kDatasetFormatVersion) {
      fail(ErrorCode::kVersion,
           "unsupported dataset format_version " + std::to_string(version));
    }
    ds.spec = spec_from_json(meta.at("spec"));
    n = meta.at("n").get<std::size_t>();
    ds.split.train = meta.at("split").at("train").get<std::vector<std::size_t>>();
    ds.split.validation =
        meta.at("split").at("validation").get<std::vector<std::size_t>>();
    ds.split.test = meta.at("split").at("test").get<std::vector<std::size_t>>();
    ds.ablated = meta.at("ablated").get<std::vector<int>>();
    ds.swapped_attribute = meta.at("swapped_attribute").get<int>();
    expected_crc = meta.at("payload_crc32").get<std::uint32_t>();
    if (meta.at("x_dim").get<std::size_t>() != observation_dim(ds.spec)) {
      fail(ErrorCode::kMalformed, "x_dim disagrees with spec");
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("meta.json: ") + e.what());
  }
  try {
    validate(ds.spec);
  } catch (const Error& e) {
    fail(ErrorCode::kMalformed, std::string("meta.json spec: ") + e.what());
  }
  const auto payload = read_file(dir / "data.bin");
  const std::size_t dim = observation_dim(ds.spec);
  const std::size_t nz = ds.spec.sensitive_classes.size();
  const std::size_t nr = ds.spec.nuisance_dim;
  const std::size_t expected = n * 4 * (dim + 1 + nz + nr);
  if (payload.size() < expected) {
    fail(ErrorCode::kTruncated,
         "data.bin holds " + std::to_string(payload.size()) +
             " bytes, header promises " + std::to_string(expected));
  }
  if (payload.size() > expected) {
    fail(ErrorCode::kMalformed, "data.bin has trailing bytes");
  }
  if (crc32_of(payload) != expected_crc) {
    fail(ErrorCode::kChecksum, "data.bin checksum mismatch");
  }
  check_split(ds.split, n);

  const bool discrete = ds.spec.nuisance_kind == NuisanceKind::kDiscrete;
  ds.samples.resize(n);
  std::size_t pos = 0;
  for (auto& s : ds.samples) {
    s.x.resize(dim);
    for (auto& v : s.x) {
      v = read_f32(payload, pos);
      pos += 4;
    }
  }
  auto check_label = [](std::int32_t v, int classes) {
    require(v >= 0 && v < classes, ErrorCode::kMalformed,
            "label out of range in data.bin");
    return v;
  };
  for (auto& s : ds.samples) {
    s.y = read_i32(payload, pos);
    pos += 4;
  }
  for (std::size_t i = 0; i < nz; ++i) {
    for (auto& s : ds.samples) {
      s.z.push_back(read_i32(payload, pos));
      pos += 4;
    }
  }
  for (auto& s : ds.samples) {
    for (std::size_t k = 0; k < nr; ++k) {
      if (discrete) {
        s.r_discrete.push_back(
            check_label(read_i32(payload, pos), ds.spec.nuisance_cardinality));
      } else {
        s.r_continuous.push_back(read_f32(payload, pos));
      }
      pos += 4;
    }
  }
  // Task/sensitive columns may be swapped; range-check against the larger.
  int max_classes = ds.spec.task_classes;
  for (int c : ds.spec.sensitive_classes) max_classes = std::max(max_classes, c);
  for (const auto& s : ds.samples) {
    check_label(s.y, max_classes);
    for (std::size_t i = 0; i < nz; ++i) check_label(s.z[i], max_classes);
  }
  return ds;
}

}  // namespace vunlearn::synthgen
