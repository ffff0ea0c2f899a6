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

#include <cstring>
#include <string>

#include "gtest/gtest.h"
#include "temp_dir.h"
#include "vunlearn/common/error.h"

namespace vunlearn {
namespace {

ErrorCode code_of(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_container(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return ErrorCode::kIo;
}

ParameterContainer sample() {
  ParameterContainer c;
  c.header = {{"kind", "test"}, {"widths", {3, 2}}};
  c.params = {1.5f, -2.25f, 0.0f, 3.0e-8f};
  return c;
}

TEST(LittleEndianTest, IntegersAreLeastSignificantByteFirst) {
  std::vector<std::uint8_t> out;
  append_u32(out, 0x01020304u);
  ASSERT_EQ(out.size(), 4u);
  EXPECT_EQ(out[0], 0x04);
  EXPECT_EQ(out[3], 0x01);
  EXPECT_EQ(read_u32(out, 0), 0x01020304u);
}

TEST(LittleEndianTest, RoundTripsEveryWidth) {
  std::vector<std::uint8_t> out;
  append_u64(out, 0x1122334455667788ULL);
  append_f32(out, -1.75f);
  append_f64(out, 3.141592653589793);
  append_i32(out, -42);
  EXPECT_EQ(read_u64(out, 0), 0x1122334455667788ULL);
  EXPECT_EQ(read_f32(out, 8), -1.75f);
  EXPECT_EQ(read_f64(out, 12), 3.141592653589793);
  EXPECT_EQ(read_i32(out, 20), -42);
}

TEST(LittleEndianTest, ReadPastEndIsTruncation) {
  std::vector<std::uint8_t> out{1, 2, 3};
  try {
    read_u32(out, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTruncated);
  }
}

TEST(Crc32Test, MatchesStandardCheckValue) {
  const std::string s = "123456789";
  std::vector<std::uint8_t> bytes(s.begin(), s.end());
  EXPECT_EQ(crc32_of(bytes), 0xCBF43926u);
}

TEST(ContainerTest, RoundTripIsExact) {
  const auto c = sample();
  const auto bytes = encode_container(c);
  const auto back = decode_container(bytes);
  EXPECT_EQ(back.header, c.header);
  EXPECT_EQ(back.params, c.params);
  EXPECT_EQ(encode_container(back), bytes);
}

TEST(ContainerTest, FileRoundTrip) {
  testing::TempDir dir;
  write_container(dir / "c.bin", sample());
  EXPECT_EQ(read_container(dir / "c.bin").params, sample().params);
}

TEST(ContainerTest, BadMagicIsMalformed) {
  auto bytes = encode_container(sample());
  bytes[0] = 'X';
  EXPECT_EQ(code_of(bytes), ErrorCode::kMalformed);
}

TEST(ContainerTest, UnknownVersionIsVersionError) {
  auto bytes = encode_container(sample());
  bytes[8] = 9;
  EXPECT_EQ(code_of(bytes), ErrorCode::kVersion);
}

TEST(ContainerTest, ShortPayloadIsTruncation) {
  auto bytes = encode_container(sample());
  bytes.resize(bytes.size() - 6);
  EXPECT_EQ(code_of(bytes), ErrorCode::kTruncated);
}

TEST(ContainerTest, FlippedParameterIsChecksumError) {
  auto bytes = encode_container(sample());
  bytes[bytes.size() - 6] ^= 0x40;
  EXPECT_EQ(code_of(bytes), ErrorCode::kChecksum);
}

TEST(ContainerTest, MissingFileIsIoError) {
  testing::TempDir dir;
  try {
    read_container(dir / "absent.bin");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

TEST(ErrorTest, CodeNamesAreDistinct) {
  EXPECT_NE(error_code_name(ErrorCode::kTruncated),
            error_code_name(ErrorCode::kChecksum));
  EXPECT_EQ(error_code_name(ErrorCode::kVersion), "version");
}

}  // namespace
}  // namespace vunlearn
