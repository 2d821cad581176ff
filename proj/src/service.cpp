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

#include "vaxtract/service.hpp"

#include <algorithm>

#include "httplib.h"
#include "json.hpp"
#include "vaxtract/error.hpp"

namespace vaxtract {
namespace {

using nlohmann::json;

void SendJson(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void SendError(httplib::Response& res, int status, std::string_view code, const std::string& message) {
  SendJson(res, status, json{{"code", code}, {"message", message}});
}

void SendError(httplib::Response& res, const Error& e) {
  SendError(res, HttpStatusFor(e.code()), to_string(e.code()), e.what());
}

json ParseBody(const httplib::Request& req) {
  json body = json::parse(req.body, nullptr, false);
  if (body.is_discarded() || !body.is_object()) {
    throw Error(ErrorCode::kInvalidArgument, "request body must be a JSON object");
  }
  return body;
}

template <typename T>
T Field(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end()) throw Error(ErrorCode::kInvalidArgument, std::string("missing field '") + key + "'");
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw Error(ErrorCode::kInvalidArgument, std::string("bad type for field '") + key + "'");
  }
}

// Wraps a handler so every failure turns into a JSON error body.
template <typename Handler>
httplib::Server::Handler Guard(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const Error& e) {
      SendError(res, e);
    } catch (const json::exception& e) {
      SendError(res, 400, "invalid_argument", e.what());
    } catch (const std::exception& e) {
      SendError(res, 500, "internal", e.what());
    }
  };
}

}  // namespace

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownRecord: return 404;
    case ErrorCode::kLeaseViolation:
    case ErrorCode::kNothingToExport:
    case ErrorCode::kNoDualReviews: return 409;
    case ErrorCode::kTimeout: return 504;
    case ErrorCode::kTransport:
    case ErrorCode::kHttpStatus:
    case ErrorCode::kRetryExhausted:
    case ErrorCode::kParseFailure: return 502;
    case ErrorCode::kIo:
    case ErrorCode::kConfig:
    case ErrorCode::kLexiconInvalid: return 500;
    default: return 400;
  }
}

Service::Service(ServiceOptions options) : options_(std::move(options)) {
  if (options_.lexicon == nullptr || options_.store == nullptr) {
    throw Error(ErrorCode::kConfig, "service needs a lexicon and an annotation store");
  }
  server_ = std::make_unique<httplib::Server>();
  install_routes();
}

Service::~Service() { stop(); }

void Service::install_routes() {
  httplib::Server& s = *server_;
  const ServiceOptions& o = options_;

  s.set_pre_routing_handler([&o](const httplib::Request& req, httplib::Response& res) {
    if (!o.api_token || req.path.rfind("/api/", 0) != 0) return httplib::Server::HandlerResponse::Unhandled;
    if (req.get_header_value("Authorization") == "Bearer " + *o.api_token) {
      return httplib::Server::HandlerResponse::Unhandled;
    }
    SendError(res, 401, "unauthorized", "missing or wrong bearer token");
    return httplib::Server::HandlerResponse::Handled;
  });

  s.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return httplib::Server::HandlerResponse::Unhandled;
    SendError(res, res.status, res.status == 404 ? "not_found" : "http_error",
              std::string(httplib::status_message(res.status)) + ": " + req.path);
    return httplib::Server::HandlerResponse::Handled;
  });

  s.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string message = "unexpected failure";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      message = e.what();
    } catch (...) {
    }
    SendError(res, 500, "internal", message);
  });

  s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    SendJson(res, 200, json{{"status", "ok"}});
  });

  s.Post("/api/extract", Guard([&o](const httplib::Request& req, httplib::Response& res) {
    const json body = ParseBody(req);
    TriageNote note;
    note.id = body.contains("id") ? Field<std::string>(body, "id") : "api";
    note.age_years = Field<int>(body, "age_years");
    note.age_months = Field<int>(body, "age_months");
    note.text = Field<std::string>(body, "text");
    ValidateNote(note);

    Engine engine = o.endpoint ? Engine::kLlm : Engine::kRules;
    if (body.contains("engine")) engine = ParseEngine(Field<std::string>(body, "engine"));
    if (engine == Engine::kRules) {
      SendJson(res, 200, ExtractWithRules(note, *o.lexicon, o.rules));
      return;
    }
    if (!o.endpoint) {
      SendError(res, 400, "engine_unavailable", "no model endpoint is configured");
      return;
    }
    const ExtractionResult r = ExtractBatch({note}, *o.endpoint, *o.lexicon, o.decoding).front();
    if (r.error) {
      SendJson(res, 502, json{{"code", "transport"}, {"message", *r.error}, {"result", r}});
      return;
    }
    SendJson(res, 200, r);
  }));

  s.Get("/api/lexicon", Guard([&o](const httplib::Request&, httplib::Response& res) {
    json labels = json::array({"No", "Unspecified"});
    json entries = json::array();
    for (const auto& e : o.lexicon->entries()) {
      labels.push_back(e.canonical_id);
      entries.push_back({{"canonical_id", e.canonical_id}, {"kind", to_string(e.kind)}, {"surfaces", e.surfaces}});
    }
    SendJson(res, 200,
             json{{"version", o.lexicon->version()}, {"labels", labels}, {"entries", entries}});
  }));

  s.Get("/api/annotations/next", Guard([&o](const httplib::Request& req, httplib::Response& res) {
    const std::string reviewer = req.get_param_value("reviewer");
    if (reviewer.empty()) throw Error(ErrorCode::kInvalidArgument, "query parameter 'reviewer' is required");
    auto record = o.store->next_pending(reviewer);
    if (!record) {
      res.status = 204;
      return;
    }
    SendJson(res, 200, *record);
  }));

  s.Post(R"(/api/annotations/([^/]+)/decision)",
         Guard([&o](const httplib::Request& req, httplib::Response& res) {
           const std::string id = req.matches[1];
           const json body = ParseBody(req);
           const std::string reviewer = Field<std::string>(body, "reviewer");
           if (reviewer.empty()) throw Error(ErrorCode::kInvalidArgument, "reviewer must not be empty");
           const std::string action = Field<std::string>(body, "action");
           Decision decision;
           if (action == "accept") {
             decision = Decision::Accept();
           } else if (action == "skip") {
             decision = Decision::Skip();
           } else if (action == "correct") {
             const VaccineLabel label = Field<VaccineLabel>(body, "label");
             if (label.is_named() && !o.lexicon->has_canonical(label.canonical_id())) {
               throw Error(ErrorCode::kUnknownLabel, "'" + label.canonical_id() + "' is not a lexicon canonical id");
             }
             decision = Decision::Correct(label);
           } else {
             throw Error(ErrorCode::kInvalidArgument, "action must be accept, correct or skip");
           }
           SendJson(res, 200, o.store->submit_decision(id, reviewer, decision));
         }));

  s.Get("/api/annotations/stats", Guard([&o](const httplib::Request& req, httplib::Response& res) {
    const StoreStats st = o.store->stats(*o.lexicon);
    json body = {{"total", st.total},         {"pending", st.pending},
                 {"skipped", st.skipped},     {"accepted", st.accepted},
                 {"corrected", st.corrected}, {"leased", st.leased},
                 {"dual_reviewed", st.dual_reviewed}};
    body["agreement"] = st.agreement ? json(*st.agreement) : json(nullptr);
    const std::string a = req.get_param_value("a");
    const std::string b = req.get_param_value("b");
    if (!a.empty() || !b.empty()) {
      if (a.empty() || b.empty()) throw Error(ErrorCode::kInvalidArgument, "both 'a' and 'b' are required");
      const Agreement ag = o.store->agreement(a, b, *o.lexicon);
      body["pair"] = {{"a", a}, {"b", b}, {"dual_reviewed", ag.dual_reviewed}, {"agreement", ag.ratio}};
    }
    SendJson(res, 200, body);
  }));

  s.Get("/api/export", Guard([&o](const httplib::Request& req, httplib::Response& res) {
    const ExportResult out = o.store->export_dataset(*o.lexicon);
    if (req.get_param_value("manifest") == "1") {
      res.set_content(out.manifest.dump(), "application/json");
    } else {
      res.set_content(out.jsonl, "application/x-ndjson");
    }
    res.status = 200;
  }));

  if (!o.ui_assets.empty() && !s.set_mount_point("/", o.ui_assets)) {
    throw Error(ErrorCode::kConfig, "cannot serve UI assets from '" + o.ui_assets + "'");
  }
}

int Service::bind(const std::string& host, int port) {
  const bool ok = port == 0 ? (port_ = server_->bind_to_any_port(host)) > 0 : server_->bind_to_port(host, port);
  if (!ok) {
    throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  }
  if (port != 0) port_ = port;
  return port_;
}

void Service::run() { server_->listen_after_bind(); }

int Service::start(const std::string& host, int port) {
  const int bound = bind(host, port);
  thread_ = std::thread([this] { run(); });
  server_->wait_until_ready();
  return bound;
}

void Service::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

}  // namespace vaxtract
