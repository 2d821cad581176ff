// Copyright 2026 The Vaxtract Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <filesystem>

#include "test_support.hpp"
#include "vaxtract/config.hpp"
#include "vaxtract/error.hpp"

namespace vaxtract {
namespace {

using testing::TempDir;

ErrorCode CodeOf(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kIo;
}

TEST(Config, ParsesEverySection) {
  const ToolkitConfig c = ParseConfig(R"({
    "lexicon": "/data/lexicon.json",
    "endpoint": {"base_url": "http://127.0.0.1:8000", "model": "llama-3b-ft", "token": "t0k",
                 "timeout_ms": 1500, "max_parallel_requests": 2, "retry_budget": 3,
                 "temperature": 0.0, "max_tokens": 32},
    "rules": {"future_cue_window": 5, "context_window": 2, "schedule_tolerance_days": 7,
              "fuzzy_generic": false, "fuzzy_min_length": 5, "past_cues": ["ago"]},
    "store": {"path": "/var/vx/log.jsonl", "lease_ms": 60000, "dual_review_fraction": 0.1,
              "snapshot_interval": 50},
    "listen": {"host": "0.0.0.0", "port": 9000},
    "api_token": "secret"
  })");
  EXPECT_EQ(c.lexicon_path, "/data/lexicon.json");
  ASSERT_TRUE(c.endpoint);
  EXPECT_EQ(c.endpoint->base_url, "http://127.0.0.1:8000");
  EXPECT_EQ(c.endpoint->model_name, "llama-3b-ft");
  EXPECT_EQ(c.endpoint->auth_token, "t0k");
  EXPECT_EQ(c.endpoint->timeout.count(), 1500);
  EXPECT_EQ(c.endpoint->max_parallel_requests, 2u);
  EXPECT_EQ(c.endpoint->retry_budget, 3);
  EXPECT_EQ(c.decoding.model_name, "llama-3b-ft");
  EXPECT_EQ(c.decoding.max_tokens, 32);
  EXPECT_EQ(c.rules.future_cue_window, 5u);
  EXPECT_EQ(c.rules.context_window, 2u);
  EXPECT_EQ(c.rules.schedule_tolerance_days, 7.0);
  EXPECT_FALSE(c.rules.fuzzy_generic);
  EXPECT_EQ(c.rules.past_cues, std::vector<std::string>{"ago"});
  EXPECT_EQ(c.store_path, "/var/vx/log.jsonl");
  EXPECT_EQ(c.lease_duration.count(), 60000);
  EXPECT_EQ(c.dual_review_fraction, 0.1);
  EXPECT_EQ(c.host, "0.0.0.0");
  EXPECT_EQ(c.port, 9000);
  EXPECT_EQ(c.api_token, "secret");

  const StoreOptions o = c.store_options();
  EXPECT_EQ(o.log_path, c.store_path);
  EXPECT_EQ(o.lease_duration.count(), 60000);
  EXPECT_EQ(o.snapshot_interval, 50u);
}

TEST(Config, Defaults) {
  const ToolkitConfig c = ParseConfig(R"({"lexicon": "lex.json"})");
  EXPECT_FALSE(c.endpoint);
  EXPECT_EQ(c.rules.future_cue_window, 4u);
  EXPECT_EQ(c.rules.schedule_tolerance_days, 14.0);
  EXPECT_EQ(c.port, 8080);
  EXPECT_EQ(c.host, "127.0.0.1");
  EXPECT_TRUE(c.store_path.empty());
  EXPECT_FALSE(c.api_token);
}

TEST(Config, RelativePathsResolveAgainstTheConfigDirectory) {
  const ToolkitConfig c =
      ParseConfig(R"({"lexicon": "../data/lexicon.json", "store": {"path": "var/log.jsonl"}, "ui_assets": "ui"})",
                  "/etc/vaxtract");
  EXPECT_EQ(std::filesystem::path(c.lexicon_path).lexically_normal(), "/etc/data/lexicon.json");
  EXPECT_EQ(std::filesystem::path(c.store_path).lexically_normal(), "/etc/vaxtract/var/log.jsonl");
  EXPECT_EQ(std::filesystem::path(c.ui_assets).lexically_normal(), "/etc/vaxtract/ui");
}

TEST(Config, RejectsBadInput) {
  EXPECT_EQ(CodeOf([] { ParseConfig("{"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseConfig("[]"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseConfig("{}"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseConfig(R"({"lexicon": "l", "lexicn": "typo"})"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseConfig(R"({"lexicon": "l", "rules": {"window": 3}})"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseConfig(R"({"lexicon": "l", "listen": {"port": "eighty"}})"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseConfig(R"({"lexicon": "l", "listen": {"port": 70000}})"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseConfig(R"({"lexicon": "l", "store": {"dual_review_fraction": 1.5}})"); }),
            ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseConfig(R"({"lexicon": "l", "store": {"lease_ms": 0}})"); }), ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { ParseConfig(R"({"lexicon": "l", "rules": {"schedule_tolerance_days": -1}})"); }),
            ErrorCode::kConfig);
  EXPECT_EQ(CodeOf([] { LoadConfigFile("/nonexistent/vaxtract.json"); }), ErrorCode::kConfig);
}

TEST(Config, Validation) {
  TempDir dir;
  testing::WriteFile(dir.file("lexicon.json"), testing::ReadFile(testing::DataPath("lexicon.json")));
  testing::WriteFile(dir.file("config.json"), R"({"lexicon": "lexicon.json", "store": {"path": "log.jsonl"}})");
  const ToolkitConfig ok = LoadConfigFile(dir.file("config.json"));
  EXPECT_EQ(ok.lexicon_path, dir.file("lexicon.json"));
  EXPECT_NO_THROW(ValidateConfig(ok));

  ToolkitConfig c = ok;
  c.lexicon_path = dir.file("missing.json");
  EXPECT_EQ(CodeOf([&] { ValidateConfig(c); }), ErrorCode::kConfig);
  c = ok;
  c.store_path = dir.file("no/such/dir/log.jsonl");
  EXPECT_EQ(CodeOf([&] { ValidateConfig(c); }), ErrorCode::kConfig);
  c = ok;
  c.ui_assets = dir.file("ui");
  EXPECT_EQ(CodeOf([&] { ValidateConfig(c); }), ErrorCode::kConfig);
  c = ok;
  c.endpoint = ModelEndpoint{};
  EXPECT_EQ(CodeOf([&] { ValidateConfig(c); }), ErrorCode::kConfig);
}

TEST(Config, ShippedExampleIsValid) {
  const ToolkitConfig c = LoadConfigFile(testing::DataPath("../config/example.json"));
  EXPECT_TRUE(std::filesystem::exists(c.lexicon_path));
  EXPECT_FALSE(c.endpoint && c.endpoint->base_url.empty());
}

}  // namespace
}  // namespace vaxtract
