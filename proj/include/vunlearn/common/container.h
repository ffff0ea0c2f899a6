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

#ifndef VUNLEARN_COMMON_CONTAINER_H_
#define VUNLEARN_COMMON_CONTAINER_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace vunlearn {

// Versioned binary parameter container shared by model and estimator
// checkpoints. Layout (little-endian):
//
//   magic "VUNLCKPT" | u32 format_version | u32 header_bytes | header JSON
//   | u64 param_count | param_count x f32 | u32 crc32(all preceding bytes)
inline constexpr std::uint32_t kContainerVersion = 1;

struct ParameterContainer {
  nlohmann::json header;
  std::vector<float> params;
};

std::vector<std::uint8_t> encode_container(const ParameterContainer& c);
ParameterContainer decode_container(std::span<const std::uint8_t> bytes);

void write_container(const std::filesystem::path& path,
                     const ParameterContainer& c);
ParameterContainer read_container(const std::filesystem::path& path);

// Little-endian helpers used by every on-disk format in the project.
void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v);
void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v);
void append_f32(std::vector<std::uint8_t>& out, float v);
void append_f64(std::vector<std::uint8_t>& out, double v);
void append_i32(std::vector<std::uint8_t>& out, std::int32_t v);
std::uint32_t read_u32(std::span<const std::uint8_t> in, std::size_t offset);
std::uint64_t read_u64(std::span<const std::uint8_t> in, std::size_t offset);
float read_f32(std::span<const std::uint8_t> in, std::size_t offset);
double read_f64(std::span<const std::uint8_t> in, std::size_t offset);
std::int32_t read_i32(std::span<const std::uint8_t> in, std::size_t offset);

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes);

}  // namespace vunlearn

#endif  // VUNLEARN_COMMON_CONTAINER_H_
