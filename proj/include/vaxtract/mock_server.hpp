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

#ifndef VAXTRACT_MOCK_SERVER_HPP_
#define VAXTRACT_MOCK_SERVER_HPP_

#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "vaxtract/corpus.hpp"

namespace httplib {
class Server;
}

namespace vaxtract {

// One scripted reply. A 2xx status wraps `content` in a chat completion
// unless `raw_body` replaces the whole HTTP body.
struct MockStep {
  int status = 200;
  std::string content;
  std::optional<std::string> raw_body;
  int delay_ms = 0;
};

// Replies keyed by the user message the client sends. Each key owns a script;
// the last step repeats once the script runs out.
struct MockFixtures {
  std::map<std::string, std::vector<MockStep>> scripts;
  std::optional<MockStep> fallback;  // for unknown user messages; else 404
};

// Response fixtures are JSON keyed by note id:
//   { "responses": { "n1": "{\"Vaccination\": \"Influenza\"}",
//                    "n2": {"status": 500},
//                    "n3": [ {"status": 500}, "{\"Vaccination\": \"No\"}" ] },
//     "fallback": "{\"Vaccination\": \"No\"}" }
// The notes resolve each id to the user message the client will send.
MockFixtures LoadMockFixtures(const Dataset& notes, std::istream& responses);
MockFixtures LoadMockFixturesFile(const Dataset& notes, const std::string& path);

// OpenAI-compatible POST /v1/chat/completions replaying MockFixtures.
class MockChatServer {
 public:
  explicit MockChatServer(MockFixtures fixtures);
  ~MockChatServer();
  MockChatServer(const MockChatServer&) = delete;
  MockChatServer& operator=(const MockChatServer&) = delete;

  // Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  // Serves on the calling thread until stop().
  void listen(const std::string& host, int port);
  void stop();

  int port() const { return port_; }
  std::string base_url() const;
  // Request bodies received so far, in arrival order.
  std::vector<std::string> requests() const;

 private:
  void install_routes();

  MockFixtures fixtures_;
  std::map<std::string, std::size_t> cursor_;
  std::vector<std::string> requests_;
  mutable std::mutex mu_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_ = "127.0.0.1";
  int port_ = 0;
};

}  // namespace vaxtract

#endif  // VAXTRACT_MOCK_SERVER_HPP_
