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

#include "vaxtract/mock_server.hpp"

#include <chrono>
#include <fstream>

#include "httplib.h"
#include "vaxtract/error.hpp"
#include "vaxtract/llm_extractor.hpp"

namespace vaxtract {
namespace {

using nlohmann::json;

MockStep StepFromJson(const json& j) {
  MockStep step;
  if (j.is_string()) {
    step.content = j.get<std::string>();
    return step;
  }
  step.status = j.value("status", 200);
  step.content = j.value("content", std::string());
  if (auto it = j.find("body"); it != j.end()) step.raw_body = it->get<std::string>();
  step.delay_ms = j.value("delay_ms", 0);
  return step;
}

std::vector<MockStep> ScriptFromJson(const json& j) {
  std::vector<MockStep> script;
  if (j.is_array()) {
    for (const auto& s : j) script.push_back(StepFromJson(s));
  } else {
    script.push_back(StepFromJson(j));
  }
  if (script.empty()) throw Error(ErrorCode::kInvalidArgument, "empty mock script");
  return script;
}

}  // namespace

MockFixtures LoadMockFixtures(const Dataset& notes, std::istream& responses) {
  json root;
  try {
    root = json::parse(responses);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("mock fixture file: ") + e.what());
  }
  std::map<std::string, const TriageNote*> by_id;
  for (const auto& note : notes.notes) by_id.emplace(note.id, &note);

  MockFixtures fixtures;
  const json scripted = root.value("responses", json::object());
  for (const auto& [id, script] : scripted.items()) {
    auto it = by_id.find(id);
    if (it == by_id.end()) {
      throw Error(ErrorCode::kIdMismatch, "mock response for unknown note id '" + id + "'");
    }
    fixtures.scripts[UserText(*it->second)] = ScriptFromJson(script);
  }
  if (auto it = root.find("fallback"); it != root.end()) fixtures.fallback = StepFromJson(*it);
  return fixtures;
}

MockFixtures LoadMockFixturesFile(const Dataset& notes, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return LoadMockFixtures(notes, in);
}

MockChatServer::MockChatServer(MockFixtures fixtures)
    : fixtures_(std::move(fixtures)), server_(std::make_unique<httplib::Server>()) {
  install_routes();
}

MockChatServer::~MockChatServer() { stop(); }

void MockChatServer::install_routes() {
  server_->Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
    json body = json::parse(req.body, nullptr, false);
    std::string user;
    std::string model = "mock";
    if (!body.is_discarded()) {
      model = body.value("model", model);
      for (const auto& m : body.value("messages", json::array())) {
        if (m.value("role", std::string()) == "user") user = m.value("content", std::string());
      }
    }

    std::optional<MockStep> step;
    {
      std::lock_guard<std::mutex> lock(mu_);
      requests_.push_back(req.body);
      if (auto it = fixtures_.scripts.find(user); it != fixtures_.scripts.end()) {
        std::size_t& pos = cursor_[user];
        step = it->second[std::min(pos, it->second.size() - 1)];
        ++pos;
      } else {
        step = fixtures_.fallback;
      }
    }
    if (!step) {
      res.status = 404;
      res.set_content(json{{"error", {{"message", "no fixture for this note"}}}}.dump(),
                      "application/json");
      return;
    }
    if (step->delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(step->delay_ms));
    res.status = step->status;
    if (step->raw_body) {
      res.set_content(*step->raw_body, "application/json");
    } else if (step->status >= 200 && step->status < 300) {
      json completion = {
          {"id", "mock-completion"},
          {"object", "chat.completion"},
          {"model", model},
          {"choices", json::array({{{"index", 0},
                                    {"message", {{"role", "assistant"}, {"content", step->content}}},
                                    {"finish_reason", "stop"}}})},
      };
      res.set_content(completion.dump(), "application/json");
    } else {
      res.set_content(json{{"error", {{"message", "scripted failure"}}}}.dump(), "application/json");
    }
  });
}

int MockChatServer::start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ < 0) throw Error(ErrorCode::kIo, "mock server cannot bind " + host);
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void MockChatServer::listen(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) throw Error(ErrorCode::kIo, "mock server cannot bind " + host);
}

void MockChatServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockChatServer::base_url() const {
  return "http://" + host_ + ":" + std::to_string(port_);
}

std::vector<std::string> MockChatServer::requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return requests_;
}

}  // namespace vaxtract
