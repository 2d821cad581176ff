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

#ifndef VAXTRACT_SERVICE_HPP_
#define VAXTRACT_SERVICE_HPP_

#include <memory>
#include <optional>
#include <string>
#include <thread>

#include "vaxtract/annotation.hpp"
#include "vaxtract/error.hpp"
#include "vaxtract/lexicon.hpp"
#include "vaxtract/llm_extractor.hpp"
#include "vaxtract/rule_extractor.hpp"

namespace httplib {
class Server;
}

namespace vaxtract {

struct ServiceOptions {
  const Lexicon* lexicon = nullptr;  // required
  AnnotationStore* store = nullptr;  // required
  RuleConfig rules;
  std::optional<ModelEndpoint> endpoint;
  Decoding decoding;
  std::string ui_assets;                 // mounted at / when set
  std::optional<std::string> api_token;  // bearer token required on /api when set
};

// HTTP status used for an error code in JSON error bodies.
int HttpStatusFor(ErrorCode code);

// JSON API over the extractors and the annotation store:
//   POST /api/extract                  {age_years, age_months, text, engine?, id?}
//   GET  /api/annotations/next?reviewer=
//   POST /api/annotations/{id}/decision {reviewer, action, label?}
//   GET  /api/annotations/stats[?a=&b=]
//   GET  /api/export[?manifest=1]
//   GET  /api/lexicon
//   GET  /healthz
// Every non-2xx response has the body {"code": ..., "message": ...}.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds the listening socket; port 0 picks a free port. Returns the port.
  // Throws kIo when the address cannot be bound.
  int bind(const std::string& host, int port);
  // Serves on the calling thread until stop(); in-flight requests complete.
  void run();
  // bind() + run() on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0);
  void stop();

  int port() const { return port_; }

 private:
  void install_routes();

  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  int port_ = 0;
};

}  // namespace vaxtract

#endif  // VAXTRACT_SERVICE_HPP_
