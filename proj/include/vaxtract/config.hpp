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

#ifndef VAXTRACT_CONFIG_HPP_
#define VAXTRACT_CONFIG_HPP_

#include <optional>
#include <string>

#include "vaxtract/annotation.hpp"
#include "vaxtract/llm_extractor.hpp"
#include "vaxtract/rule_extractor.hpp"

namespace vaxtract {

// Everything the CLI and the service read from the toolkit config file.
// Relative paths are resolved against the directory of the config file.
struct ToolkitConfig {
  std::string lexicon_path;
  std::optional<ModelEndpoint> endpoint;  // absent: the llm engine is unavailable
  Decoding decoding;
  RuleConfig rules;
  std::string store_path;  // decision log
  std::chrono::milliseconds lease_duration{std::chrono::minutes(10)};
  double dual_review_fraction = 0.0;
  std::size_t snapshot_interval = 200;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string ui_assets;  // optional static directory mounted at /
  std::optional<std::string> api_token;  // static bearer token for /api

  StoreOptions store_options() const;
};

// Parses the JSON config. Throws kConfig on unknown keys or bad values.
// When base_dir is given, relative paths are resolved against it.
ToolkitConfig ParseConfig(const std::string& json_text, const std::string& base_dir = {});
ToolkitConfig LoadConfigFile(const std::string& path);

// Startup checks: the lexicon file exists, the store directory exists, the
// UI directory (when set) exists, and the endpoint is well formed.
void ValidateConfig(const ToolkitConfig& config);

}  // namespace vaxtract

#endif  // VAXTRACT_CONFIG_HPP_
