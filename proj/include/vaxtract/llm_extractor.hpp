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

#ifndef VAXTRACT_LLM_EXTRACTOR_HPP_
#define VAXTRACT_LLM_EXTRACTOR_HPP_

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vaxtract/corpus.hpp"
#include "vaxtract/label.hpp"
#include "vaxtract/lexicon.hpp"

namespace vaxtract {

struct Decoding {
  double temperature = 0.0;
  int max_tokens = 64;
  std::string model_name = "llama-3.2-3b-instruct";
};

struct PromptBundle {
  std::string system_text;
  std::string user_text;
  Decoding decoding;
};

// The extraction instruction block, compiled in from
// data/prompts/vaccine_extraction_v1.txt (without its final newline).
const std::string& ExtractionPrompt();
std::string_view ExtractionPromptVersion();

// "Age: <Y>Y <M>M. <text>", the note text copied byte for byte.
std::string UserText(const TriageNote& note);
PromptBundle BuildPrompt(const TriageNote& note, const Decoding& decoding = {});

// Any OpenAI-compatible chat-completions server.
struct ModelEndpoint {
  std::string base_url;  // scheme://host[:port][/prefix]
  std::string model_name;
  std::optional<std::string> auth_token;
  std::chrono::milliseconds timeout{30000};
  std::size_t max_parallel_requests = 4;
  int retry_budget = 1;

  // Throws kConfig when a field is out of range.
  void validate() const;
};

// The JSON request body for one chat completion.
std::string ChatRequestBody(const PromptBundle& bundle);

// Sends one request and returns choices[0].message.content. Retryable
// failures (connection errors, timeouts, 429 and 5xx) are retried up to
// retry_budget times. Throws kTimeout, kTransport, kHttpStatus (non-retryable
// status) or kRetryExhausted (retryable status on the last attempt).
std::string CallModel(const ModelEndpoint& endpoint, const PromptBundle& bundle);

// Extracts the value of the "Vaccination" key (case-insensitive, top level or
// nested one object deep). Tries the whole body, then the body with code
// fences removed, then each embedded {...} substring. Throws kParseFailure
// with Error::raw set to the input.
std::string ParseResponse(std::string_view raw);

// Maps a model answer onto a label. "No" and "Unspecified" match
// case-insensitively with trailing periods dropped; known surfaces resolve
// through the lexicon; anything else stays Named under its folded form with
// unknown_surface set. With a gold label string, exact_match records whether
// the trimmed answer equals it.
ExtractionResult NormalizeResponse(std::string_view raw_label, const Lexicon& lexicon,
                                   std::optional<std::string_view> gold_label = std::nullopt);

using ModelCaller = std::function<std::string(const PromptBundle&)>;

// Runs every note through the model with at most max_parallel calls in
// flight. Results come back in input order. Call failures and unparseable
// answers never abort the batch: they yield label No with error or
// parse_failed set.
std::vector<ExtractionResult> ExtractBatch(const std::vector<TriageNote>& notes,
                                           const ModelCaller& caller, const Lexicon& lexicon,
                                           std::size_t max_parallel, const Decoding& decoding = {});
std::vector<ExtractionResult> ExtractBatch(const std::vector<TriageNote>& notes,
                                           const ModelEndpoint& endpoint, const Lexicon& lexicon,
                                           const Decoding& decoding = {});

}  // namespace vaxtract

#endif  // VAXTRACT_LLM_EXTRACTOR_HPP_
