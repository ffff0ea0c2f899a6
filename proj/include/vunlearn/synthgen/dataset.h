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

#ifndef VUNLEARN_SYNTHGEN_DATASET_H_
#define VUNLEARN_SYNTHGEN_DATASET_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace vunlearn::synthgen {

enum class NuisanceKind { kDiscrete, kContinuousUniform };
enum class Mixing { kIdentity, kFixedOrthogonal };

struct GeneratorSpec {
  int task_classes = 2;
  std::vector<int> sensitive_classes{2};
  int nuisance_dim = 0;
  NuisanceKind nuisance_kind = NuisanceKind::kDiscrete;
  int nuisance_cardinality = 2;  // used when nuisance_kind is discrete
  int embed_dim_per_factor = 1;
  Mixing mixing = Mixing::kIdentity;
  std::uint64_t mixing_seed = 0;
  double noise_std = 0.0;
  std::uint64_t seed = 0;

  bool operator==(const GeneratorSpec&) const = default;
};

// Throws ErrorCode::kConfig naming the offending field.
void validate(const GeneratorSpec& spec);

// (1 + |z|) blocks of embed width, plus nuisance_dim blocks of embed width
// for a discrete nuisance or nuisance_dim raw coordinates for a continuous
// one.
std::size_t observation_dim(const GeneratorSpec& spec);

struct FactorSample {
  std::vector<float> x;
  std::int32_t y = 0;
  std::vector<std::int32_t> z;
  std::vector<std::int32_t> r_discrete;  // nuisance_dim labels, or empty
  std::vector<float> r_continuous;       // nuisance_dim values, or empty

  bool operator==(const FactorSample&) const = default;
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;

  bool operator==(const Split&) const = default;
};

struct FactorDataset {
  GeneratorSpec spec;
  std::vector<FactorSample> samples;
  Split split;
  // Sensitive attributes whose block was replaced by the class-0 code in f.
  std::vector<int> ablated;
  // Set when task and sensitive label columns were exchanged after
  // generation; value is the swapped attribute index, -1 otherwise.
  int swapped_attribute = -1;

  std::size_t size() const { return samples.size(); }
  std::size_t x_dim() const;
  bool operator==(const FactorDataset&) const = default;
};

FactorDataset generate_dataset(const GeneratorSpec& spec, std::size_t n);

// Regenerates with the same seed and factors, with z[attribute_index]
// pinned to class 0 inside f. Recorded labels are unchanged.
FactorDataset ablate_sensitive(const FactorDataset& dataset,
                               int attribute_index);

// Exchanges the task label column with sensitive column `attribute_index`.
// x is untouched. Both attributes must share a class count.
FactorDataset swap_task_and_sensitive(const FactorDataset& dataset,
                                      int attribute_index);

// Signed code of `value` in a block of `width` coordinates: a signed one-hot
// (+1 at the class, -1 elsewhere, repeated cyclically) when width >= classes,
// otherwise the signed binary code of `value` repeated cyclically.
std::vector<float> encode_factor(int value, int classes, int width);

// Eigen views over a subset of rows.
Eigen::MatrixXd features(const FactorDataset& dataset,
                         std::span<const std::size_t> rows);
Eigen::MatrixXd features(const FactorDataset& dataset);
std::vector<int> task_labels(const FactorDataset& dataset,
                             std::span<const std::size_t> rows);
std::vector<int> sensitive_labels(const FactorDataset& dataset,
                                  int attribute_index,
                                  std::span<const std::size_t> rows);
std::vector<std::size_t> all_rows(const FactorDataset& dataset);

// Orthogonal matrix M with x = M u + noise, where u is the concatenated
// factor code. Identity when mixing is identity.
Eigen::MatrixXd mixing_matrix(const GeneratorSpec& spec);

// Coordinates of sensitive attribute `attribute_index` inside u.
struct BlockRange {
  std::size_t offset = 0;
  std::size_t width = 0;
};
BlockRange sensitive_block(const GeneratorSpec& spec, int attribute_index);

inline constexpr int kDatasetFormatVersion = 1;

// Directory with meta.json and data.bin; see README for the byte layout.
void save_dataset(const FactorDataset& dataset,
                  const std::filesystem::path& dir);
FactorDataset load_dataset(const std::filesystem::path& dir);

// CRC-32 of the data.bin payload as written by save_dataset.
std::uint32_t payload_checksum(const FactorDataset& dataset);

}  // namespace vunlearn::synthgen

#endif  // VUNLEARN_SYNTHGEN_DATASET_H_
