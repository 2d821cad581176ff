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

#include "vaxtract/llm_extractor.hpp"

#include <algorithm>
#include <atomic>
#include <regex>
#include <thread>

#include "httplib.h"
#include "vaxtract/error.hpp"
#include "vaxtract/prompt_resource.hpp"
#include "vaxtract/text.hpp"

namespace vaxtract {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

std::optional<std::string> FindVaccinationKey(const json& j, int depth) {
  if (!j.is_object()) return std::nullopt;
  for (const auto& item : j.items()) {
    if (ToLowerAscii(item.key()) == "vaccination" && item.value().is_string()) {
      return item.value().get<std::string>();
    }
  }
  if (depth > 0) {
    for (const auto& item : j.items()) {
      if (auto v = FindVaccinationKey(item.value(), depth - 1)) return v;
    }
  }
  return std::nullopt;
}

std::optional<std::string> TryParse(std::string_view text) {
  json j = json::parse(text.begin(), text.end(), nullptr, /*allow_exceptions=*/false);
  if (j.is_discarded()) return std::nullopt;
  return FindVaccinationKey(j, 1);
}

std::optional<std::string> StripCodeFence(std::string_view raw) {
  const auto open = raw.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body_start = raw.find('\n', open + 3);
  if (body_start == std::string_view::npos) return std::nullopt;
  ++body_start;
  const auto close = raw.find("```", body_start);
  return std::string(raw.substr(body_start, close == std::string_view::npos
                                                ? std::string_view::npos
                                                : close - body_start));
}

// End (exclusive) of the balanced {...} starting at `open`, honouring JSON
// string literals.
std::optional<std::size_t> MatchBrace(std::string_view s, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

struct BaseUrl {
  std::string scheme_host_port;
  std::string prefix;
};

BaseUrl SplitBaseUrl(const std::string& url) {
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(url, m, kUrl)) {
    throw Error(ErrorCode::kConfig, "endpoint base_url '" + url + "' is not an http(s) URL");
  }
  std::string prefix = m[2].matched ? m[2].str() : std::string();
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str(), prefix};
}

bool RetryableStatus(int status) { return status == 429 || status >= 500; }

}  // namespace

const std::string& ExtractionPrompt() {
  static const std::string kPrompt(kExtractionPromptText);
  return kPrompt;
}

std::string_view ExtractionPromptVersion() { return kExtractionPromptVersion; }

std::string UserText(const TriageNote& note) { return FormatAgePrefix(note) + " " + note.text; }

PromptBundle BuildPrompt(const TriageNote& note, const Decoding& decoding) {
  return PromptBundle{ExtractionPrompt(), UserText(note), decoding};
}

void ModelEndpoint::validate() const {
  SplitBaseUrl(base_url);
  if (max_parallel_requests < 1) throw Error(ErrorCode::kConfig, "max_parallel_requests must be >= 1");
  if (timeout.count() <= 0) throw Error(ErrorCode::kConfig, "timeout must be positive");
  if (retry_budget < 0) throw Error(ErrorCode::kConfig, "retry_budget must be >= 0");
}

std::string ChatRequestBody(const PromptBundle& bundle) {
  ordered_json body;
  body["model"] = bundle.decoding.model_name;
  body["messages"] = ordered_json::array({
      {{"role", "system"}, {"content", bundle.system_text}},
      {{"role", "user"}, {"content", bundle.user_text}},
  });
  body["temperature"] = bundle.decoding.temperature;
  body["max_tokens"] = bundle.decoding.max_tokens;
  return body.dump();
}

std::string CallModel(const ModelEndpoint& endpoint, const PromptBundle& bundle) {
  const BaseUrl url = SplitBaseUrl(endpoint.base_url);
  httplib::Client client(url.scheme_host_port);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(endpoint.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(endpoint.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());
  if (endpoint.auth_token) client.set_bearer_token_auth(*endpoint.auth_token);

  PromptBundle request = bundle;
  if (!endpoint.model_name.empty()) request.decoding.model_name = endpoint.model_name;
  const std::string body = ChatRequestBody(request);
  const std::string path = url.prefix + "/v1/chat/completions";

  std::optional<Error> last;
  for (int attempt = 0; attempt <= endpoint.retry_budget; ++attempt) {
    const auto started = std::chrono::steady_clock::now();
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      const auto elapsed = std::chrono::steady_clock::now() - started;
      const auto err = res.error();
      const bool timed_out = err == httplib::Error::ConnectionTimeout ||
                             (err == httplib::Error::Read && elapsed >= endpoint.timeout);
      last = timed_out ? Error(ErrorCode::kTimeout, "model call timed out after " +
                                                         std::to_string(endpoint.timeout.count()) + " ms")
                       : Error(ErrorCode::kTransport, "model call failed: " + httplib::to_string(err));
      continue;
    }
    if (res->status >= 200 && res->status < 300) {
      json j = json::parse(res->body, nullptr, false);
      try {
        if (!j.is_discarded()) {
          const auto& content = j.at("choices").at(0).at("message").at("content");
          if (content.is_string()) return content.get<std::string>();
        }
      } catch (const json::exception&) {
      }
      throw Error(ErrorCode::kTransport, "response is not a chat completion: " + res->body.substr(0, 200));
    }
    Error e(RetryableStatus(res->status) ? ErrorCode::kRetryExhausted : ErrorCode::kHttpStatus,
            "model endpoint returned HTTP " + std::to_string(res->status) + ": " +
                res->body.substr(0, 200));
    e.http_status = res->status;
    if (!RetryableStatus(res->status)) throw e;
    last = std::move(e);
  }
  throw *last;
}

std::string ParseResponse(std::string_view raw) {
  if (auto v = TryParse(raw)) return *v;
  if (auto fenced = StripCodeFence(raw)) {
    if (auto v = TryParse(*fenced)) return *v;
  }
  for (auto open = raw.find('{'); open != std::string_view::npos; open = raw.find('{', open + 1)) {
    if (auto close = MatchBrace(raw, open)) {
      if (auto v = TryParse(raw.substr(open, *close - open))) return *v;
    }
  }
  Error e(ErrorCode::kParseFailure, "no Vaccination field in model response");
  e.raw = std::string(raw);
  throw e;
}

ExtractionResult NormalizeResponse(std::string_view raw_label, const Lexicon& lexicon,
                                   std::optional<std::string_view> gold_label) {
  ExtractionResult result;
  result.engine = Engine::kLlm;
  result.exact_match_surface = std::string(raw_label);
  std::string_view answer = TrimWhitespace(raw_label);
  if (gold_label) result.exact_match = answer == TrimWhitespace(*gold_label);
  while (!answer.empty() && answer.back() == '.') answer.remove_suffix(1);
  answer = TrimWhitespace(answer);
  if (answer.empty()) throw Error(ErrorCode::kInvalidArgument, "empty model answer");

  const std::string lowered = ToLowerAscii(answer);
  if (lowered == "no") {
    result.label = VaccineLabel::No();
  } else if (lowered == "unspecified") {
    result.label = VaccineLabel::Unspecified();
  } else if (auto canonical = lexicon.canonical_of(answer)) {
    result.label = VaccineLabel::Named(*canonical, std::string(answer));
  } else {
    std::string folded = FoldKey(answer);
    if (folded.empty()) folded = std::string(answer);
    result.label = VaccineLabel::Named(std::move(folded), std::string(answer));
    result.unknown_surface = true;
  }
  return result;
}

std::vector<ExtractionResult> ExtractBatch(const std::vector<TriageNote>& notes,
                                           const ModelCaller& caller, const Lexicon& lexicon,
                                           std::size_t max_parallel, const Decoding& decoding) {
  std::vector<ExtractionResult> results(notes.size());
  std::atomic<std::size_t> next{0};

  auto work = [&]() {
    for (std::size_t i = next++; i < notes.size(); i = next++) {
      const TriageNote& note = notes[i];
      ExtractionResult r;
      r.engine = Engine::kLlm;
      try {
        const std::string raw = caller(BuildPrompt(note, decoding));
        r.raw_response = raw;
        try {
          std::optional<std::string> gold;
          if (note.gold) gold = note.gold->label_string();
          const std::string answer = ParseResponse(raw);
          r = NormalizeResponse(answer, lexicon, gold);
          r.raw_response = raw;
        } catch (const Error& e) {
          if (e.code() != ErrorCode::kParseFailure && e.code() != ErrorCode::kInvalidArgument) throw;
          r.parse_failed = true;
          r.label = VaccineLabel::No();
        }
      } catch (const std::exception& e) {
        r.label = VaccineLabel::No();
        r.error = e.what();
      }
      r.note_id = note.id;
      r.engine = Engine::kLlm;
      results[i] = std::move(r);
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(max_parallel, 1), notes.size());
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  return results;
}

std::vector<ExtractionResult> ExtractBatch(const std::vector<TriageNote>& notes,
                                           const ModelEndpoint& endpoint, const Lexicon& lexicon,
                                           const Decoding& decoding) {
  endpoint.validate();
  return ExtractBatch(
      notes, [&endpoint](const PromptBundle& b) { return CallModel(endpoint, b); }, lexicon,
      endpoint.max_parallel_requests, decoding);
}

}  // namespace vaxtract
