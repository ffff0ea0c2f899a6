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

#include <functional>

#include "gtest/gtest.h"
#include "vunlearn/common/error.h"

namespace vunlearn::cli {
namespace {

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kConfig);
    return e.what();
  }
  ADD_FAILURE() << "no error raised";
  return "";
}

const char* kMinimal = R"(
# minimal run
n = 100
task_classes = 2
sensitive_classes = 2, 3   # two attributes
seed = 5
)";

TEST(KeyValuesTest, CommentsAndWhitespace) {
  const auto kv = parse_key_values(kMinimal);
  EXPECT_EQ(kv.size(), 4u);
  EXPECT_EQ(kv.at("sensitive_classes"), "2, 3");
  EXPECT_EQ(kv.at("seed"), "5");
}

TEST(KeyValuesTest, MalformedAndRepeatedLines) {
  EXPECT_NE(message_of([] { parse_key_values("a = 1\nnonsense\n"); })
                .find("line 2"),
            std::string::npos);
  EXPECT_NE(message_of([] { parse_key_values("a = 1\na = 2\n"); })
                .find("repeated key 'a'"),
            std::string::npos);
  EXPECT_NE(message_of([] { parse_key_values(" = 1\n"); }).find("empty key"),
            std::string::npos);
}

TEST(KeyValuesTest, FlagsWin) {
  auto kv = merge(parse_key_values(kMinimal), {{"seed", "9"}, {"out", "x"}});
  EXPECT_EQ(kv.at("seed"), "9");
  const auto rc = to_run_config(kv);
  EXPECT_EQ(rc.seed, 9u);
  EXPECT_EQ(rc.generator.seed, 9u);
  EXPECT_EQ(rc.train.seed, 9u);
  EXPECT_EQ(run_directory(rc), std::filesystem::path("x"));
}

TEST(RunConfigTest, DefaultsAndParsedValues) {
  auto kv = parse_key_values(kMinimal);
  kv["gamma"] = "0.4";
  kv["sensitive_attributes"] = "0,1";
  kv["hidden"] = "6,3,6";
  kv["mode"] = "parallel";
  kv["anneal"] = "true";
  kv["nuisance_kind"] = "continuous-uniform";
  kv["mixing"] = "fixed-orthogonal";
  const auto rc = to_run_config(kv);
  EXPECT_EQ(rc.n, 100u);
  EXPECT_EQ(rc.generator.sensitive_classes, (std::vector<int>{2, 3}));
  EXPECT_EQ(rc.train.gammas, (std::vector<double>{0.4, 0.4}));
  EXPECT_EQ(rc.model.hidden, (std::vector<std::size_t>{6, 3, 6}));
  EXPECT_EQ(rc.train.mode, trainer::TrainMode::kParallel);
  EXPECT_TRUE(rc.train.anneal);
  EXPECT_EQ(rc.generator.nuisance_kind,
            synthgen::NuisanceKind::kContinuousUniform);
  EXPECT_EQ(rc.generator.mixing, synthgen::Mixing::kFixedOrthogonal);
  EXPECT_EQ(rc.attribute, 0);
  EXPECT_EQ(rc.attacker.fit.seed, 5u);
  EXPECT_EQ(dataset_directory(rc),
            std::filesystem::path("runs") / (rc.hash + "-5") / "dataset");
}

TEST(RunConfigTest, MissingKeysAreNamed) {
  for (const char* key : {"n", "task_classes", "sensitive_classes", "seed"}) {
    auto kv = parse_key_values(kMinimal);
    kv.erase(key);
    EXPECT_NE(message_of([&] { to_run_config(kv); })
                  .find(std::string("'") + key + "'"),
              std::string::npos)
        << key;
  }
}

TEST(RunConfigTest, BadValuesAreNamed) {
  const std::pair<const char*, const char*> cases[] = {
      {"epochs", "ten"},       {"alpha", "1.0x"},   {"mixing", "random"},
      {"activation", "gelu"},  {"gamma", "0.1,,2"}, {"anneal", "maybe"},
      {"nuisance_kind", "gaussian"}, {"mode", "async"}};
  for (const auto& [key, value] : cases) {
    auto kv = parse_key_values(kMinimal);
    kv[key] = value;
    EXPECT_NE(message_of([&] { to_run_config(kv); }).find(key),
              std::string::npos)
        << key;
  }
  auto kv = parse_key_values(kMinimal);
  kv["learning_rate"] = "0.1";
  EXPECT_NE(message_of([&] { to_run_config(kv); }).find("learning_rate"),
            std::string::npos);
}

TEST(HashTest, IgnoresSeedOutAndMode) {
  const auto base = parse_key_values(kMinimal);
  const auto h = config_hash(base);
  EXPECT_EQ(h.size(), 8u);
  EXPECT_EQ(config_hash(merge(base, {{"seed", "1"}, {"out", "d"},
                                     {"mode", "parallel"}})),
            h);
  EXPECT_NE(config_hash(merge(base, {{"gamma", "0.5"}})), h);
}

TEST(EchoTest, CarriesCoefficients) {
  auto kv = parse_key_values(kMinimal);
  kv["alpha"] = "5";
  const auto echo = config_echo(to_run_config(kv));
  EXPECT_EQ(echo.at("alpha"), 5.0);
  EXPECT_TRUE(echo.at("gammas").is_array());
  EXPECT_EQ(echo.at("config_hash").get<std::string>().size(), 8u);
}

}  // namespace
}  // namespace vunlearn::cli
