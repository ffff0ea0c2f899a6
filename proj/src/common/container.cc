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

#include "vunlearn/common/container.h"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "vunlearn/common/error.h"

namespace vunlearn {
namespace {

constexpr char kMagic[8] = {'V', 'U', 'N', 'L', 'C', 'K', 'P', 'T'};

template <typename T>
void append_le(std::vector<std::uint8_t>& out, T v) {
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
  }
  out.insert(out.end(), raw, raw + sizeof(T));
}

template <typename T>
T read_le(std::span<const std::uint8_t> in, std::size_t offset) {
  if (offset + sizeof(T) > in.size()) {
    fail(ErrorCode::kTruncated, "read past end of buffer");
  }
  std::uint8_t raw[sizeof(T)];
  std::memcpy(raw, in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i < sizeof(T) / 2; ++i) {
      std::swap(raw[i], raw[sizeof(T) - 1 - i]);
    }
  }
  T v;
  std::memcpy(&v, raw, sizeof(T));
  return v;
}

}  // namespace

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  append_le(out, v);
}
void append_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  append_le(out, v);
}
void append_f32(std::vector<std::uint8_t>& out, float v) { append_le(out, v); }
void append_f64(std::vector<std::uint8_t>& out, double v) {
  append_le(out, v);
}
void append_i32(std::vector<std::uint8_t>& out, std::int32_t v) {
  append_le(out, v);
}
std::uint32_t read_u32(std::span<const std::uint8_t> in, std::size_t offset) {
  return read_le<std::uint32_t>(in, offset);
}
std::uint64_t read_u64(std::span<const std::uint8_t> in, std::size_t offset) {
  return read_le<std::uint64_t>(in, offset);
}
float read_f32(std::span<const std::uint8_t> in, std::size_t offset) {
  return read_le<float>(in, offset);
}
double read_f64(std::span<const std::uint8_t> in, std::size_t offset) {
  return read_le<double>(in, offset);
}
std::int32_t read_i32(std::span<const std::uint8_t> in, std::size_t offset) {
  return read_le<std::int32_t>(in, offset);
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for large buffers.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t chunk =
        std::min<std::size_t>(bytes.size() - pos, 1u << 30);
    crc = crc32(crc, bytes.data() + pos, static_cast<uInt>(chunk));
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

void write_file(const std::filesystem::path& path,
                std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::kIo, "short write to " + path.string());
}

std::vector<std::uint8_t> encode_container(const ParameterContainer& c) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  append_u32(out, kContainerVersion);
  const std::string header = c.header.dump();
  append_u32(out, static_cast<std::uint32_t>(header.size()));
  out.insert(out.end(), header.begin(), header.end());
  append_u64(out, c.params.size());
  for (float p : c.params) append_f32(out, p);
  append_u32(out, crc32_of(out));
  return out;
}

ParameterContainer decode_container(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    fail(ErrorCode::kMalformed, "not a parameter container (bad magic)");
  }
  std::size_t pos = sizeof(kMagic);
  const std::uint32_t version = read_u32(bytes, pos);
  pos += 4;
  if (version != kContainerVersion) {
    fail(ErrorCode::kVersion,
         "unsupported container version " + std::to_string(version));
  }
  const std::uint32_t header_bytes = read_u32(bytes, pos);
  pos += 4;
  if (pos + header_bytes + 8 > bytes.size()) {
    fail(ErrorCode::kTruncated, "container header truncated");
  }
  ParameterContainer c;
  try {
    c.header = nlohmann::json::parse(
        bytes.begin() + static_cast<std::ptrdiff_t>(pos),
        bytes.begin() + static_cast<std::ptrdiff_t>(pos + header_bytes));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kMalformed, std::string("container header: ") + e.what());
  }
  pos += header_bytes;
  const std::uint64_t count = read_u64(bytes, pos);
  pos += 8;
  if (count > (bytes.size() - pos) / 4 || pos + count * 4 + 4 > bytes.size()) {
    fail(ErrorCode::kTruncated, "container payload truncated");
  }
  if (pos + count * 4 + 4 != bytes.size()) {
    fail(ErrorCode::kMalformed, "trailing bytes after container payload");
  }
  const std::uint32_t stored = read_u32(bytes, pos + count * 4);
  if (stored != crc32_of(bytes.first(pos + count * 4))) {
    fail(ErrorCode::kChecksum, "container checksum mismatch");
  }
  c.params.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    c.params[i] = read_f32(bytes, pos + i * 4);
  }
  return c;
}

void write_container(const std::filesystem::path& path,
                     const ParameterContainer& c) {
  write_file(path, encode_container(c));
}

ParameterContainer read_container(const std::filesystem::path& path) {
  return decode_container(read_file(path));
}

}  // namespace vunlearn
