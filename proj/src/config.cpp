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

#include "vaxtract/config.hpp"

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "vaxtract/error.hpp"

namespace vaxtract {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void CheckKeys(const json& obj, const std::string& where, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw Error(ErrorCode::kConfig, where + " must be an object");
  for (const auto& [key, value] : obj.items()) {
    if (allowed.count(key) == 0) {
      throw Error(ErrorCode::kConfig, "unknown key '" + key + "' in " + where);
    }
  }
}

template <typename T>
T Get(const json& obj, const std::string& key, const std::string& where, T fallback) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kConfig, "bad value for '" + key + "' in " + where);
  }
}

std::string Resolve(const std::string& path, const std::string& base_dir) {
  if (path.empty() || base_dir.empty() || fs::path(path).is_absolute()) return path;
  return (fs::path(base_dir) / path).lexically_normal().string();
}

}  // namespace

StoreOptions ToolkitConfig::store_options() const {
  StoreOptions o;
  o.log_path = store_path;
  o.lease_duration = lease_duration;
  o.dual_review_fraction = dual_review_fraction;
  o.snapshot_interval = snapshot_interval;
  return o;
}

ToolkitConfig ParseConfig(const std::string& json_text, const std::string& base_dir) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, std::string("config is not valid JSON: ") + e.what());
  }
  CheckKeys(root, "config", {"lexicon", "endpoint", "rules", "store", "listen", "ui_assets", "api_token"});

  ToolkitConfig c;
  c.lexicon_path = Resolve(Get<std::string>(root, "lexicon", "config", ""), base_dir);
  if (c.lexicon_path.empty()) throw Error(ErrorCode::kConfig, "config.lexicon is required");
  c.ui_assets = Resolve(Get<std::string>(root, "ui_assets", "config", ""), base_dir);
  if (auto token = Get<std::string>(root, "api_token", "config", ""); !token.empty()) c.api_token = token;

  if (auto it = root.find("endpoint"); it != root.end() && !it->is_null()) {
    const json& e = *it;
    CheckKeys(e, "endpoint", {"base_url", "model", "token", "timeout_ms", "max_parallel_requests",
                              "retry_budget", "temperature", "max_tokens"});
    ModelEndpoint ep;
    ep.base_url = Get<std::string>(e, "base_url", "endpoint", "");
    ep.model_name = Get<std::string>(e, "model", "endpoint", c.decoding.model_name);
    if (auto token = Get<std::string>(e, "token", "endpoint", ""); !token.empty()) ep.auth_token = token;
    ep.timeout = std::chrono::milliseconds(Get<std::int64_t>(e, "timeout_ms", "endpoint", ep.timeout.count()));
    ep.max_parallel_requests = Get<std::size_t>(e, "max_parallel_requests", "endpoint", ep.max_parallel_requests);
    ep.retry_budget = Get<int>(e, "retry_budget", "endpoint", ep.retry_budget);
    c.decoding.model_name = ep.model_name;
    c.decoding.temperature = Get<double>(e, "temperature", "endpoint", c.decoding.temperature);
    c.decoding.max_tokens = Get<int>(e, "max_tokens", "endpoint", c.decoding.max_tokens);
    c.endpoint = ep;
  }

  if (auto it = root.find("rules"); it != root.end() && !it->is_null()) {
    const json& r = *it;
    CheckKeys(r, "rules", {"future_cue_window", "context_window", "schedule_tolerance_days",
                           "fuzzy_generic", "fuzzy_min_length", "past_cues"});
    c.rules.future_cue_window = Get<std::size_t>(r, "future_cue_window", "rules", c.rules.future_cue_window);
    c.rules.context_window = Get<std::size_t>(r, "context_window", "rules", c.rules.context_window);
    c.rules.schedule_tolerance_days =
        Get<double>(r, "schedule_tolerance_days", "rules", c.rules.schedule_tolerance_days);
    c.rules.fuzzy_generic = Get<bool>(r, "fuzzy_generic", "rules", c.rules.fuzzy_generic);
    c.rules.fuzzy_min_length = Get<std::size_t>(r, "fuzzy_min_length", "rules", c.rules.fuzzy_min_length);
    c.rules.past_cues = Get<std::vector<std::string>>(r, "past_cues", "rules", c.rules.past_cues);
    if (c.rules.schedule_tolerance_days < 0) {
      throw Error(ErrorCode::kConfig, "rules.schedule_tolerance_days must be non-negative");
    }
  }

  if (auto it = root.find("store"); it != root.end() && !it->is_null()) {
    const json& s = *it;
    CheckKeys(s, "store", {"path", "lease_ms", "dual_review_fraction", "snapshot_interval"});
    c.store_path = Resolve(Get<std::string>(s, "path", "store", ""), base_dir);
    c.lease_duration = std::chrono::milliseconds(Get<std::int64_t>(s, "lease_ms", "store", c.lease_duration.count()));
    c.dual_review_fraction = Get<double>(s, "dual_review_fraction", "store", c.dual_review_fraction);
    c.snapshot_interval = Get<std::size_t>(s, "snapshot_interval", "store", c.snapshot_interval);
    if (c.lease_duration.count() <= 0) throw Error(ErrorCode::kConfig, "store.lease_ms must be positive");
    if (c.dual_review_fraction < 0.0 || c.dual_review_fraction > 1.0) {
      throw Error(ErrorCode::kConfig, "store.dual_review_fraction must lie in [0, 1]");
    }
  }

  if (auto it = root.find("listen"); it != root.end() && !it->is_null()) {
    const json& l = *it;
    CheckKeys(l, "listen", {"host", "port"});
    c.host = Get<std::string>(l, "host", "listen", c.host);
    c.port = Get<int>(l, "port", "listen", c.port);
    if (c.port < 0 || c.port > 65535) throw Error(ErrorCode::kConfig, "listen.port out of range");
  }
  return c;
}

ToolkitConfig LoadConfigFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kConfig, "cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseConfig(buf.str(), fs::absolute(path).parent_path().string());
}

void ValidateConfig(const ToolkitConfig& config) {
  if (!fs::is_regular_file(config.lexicon_path)) {
    throw Error(ErrorCode::kConfig, "lexicon file '" + config.lexicon_path + "' does not exist");
  }
  if (!config.store_path.empty()) {
    fs::path dir = fs::path(config.store_path).parent_path();
    if (dir.empty()) dir = ".";
    if (!fs::is_directory(dir)) {
      throw Error(ErrorCode::kConfig, "store directory '" + dir.string() + "' does not exist");
    }
  }
  if (!config.ui_assets.empty() && !fs::is_directory(config.ui_assets)) {
    throw Error(ErrorCode::kConfig, "ui_assets directory '" + config.ui_assets + "' does not exist");
  }
  if (config.endpoint) config.endpoint->validate();
}

}  // namespace vaxtract
