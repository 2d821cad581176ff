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

#ifndef VAXTRACT_ERROR_HPP_
#define VAXTRACT_ERROR_HPP_

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace vaxtract {

enum class ErrorCode {
  kMalformedRecord,
  kDuplicateId,
  kUnknownLabel,
  kMissingAgePrefix,
  kAgeOutOfRange,
  kEmptyTemplates,
  kInvalidArgument,
  kLexiconInvalid,
  kParseFailure,
  kTimeout,
  kTransport,
  kHttpStatus,
  kRetryExhausted,
  kIdMismatch,
  kEmptyInput,
  kUnknownRecord,
  kLeaseViolation,
  kIdenticalCorrection,
  kNoDualReviews,
  kNothingToExport,
  kConfig,
  kIo,
};

// Stable snake_case name, used in JSON error bodies.
std::string_view to_string(ErrorCode code);

// All toolkit failures are reported as vaxtract::Error. Optional fields carry
// the context some callers need: the 1-based input line of a malformed record,
// the HTTP status of a failed model call, or the raw text of an unparseable
// model response.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

  std::optional<std::size_t> line;
  std::optional<int> http_status;
  std::optional<std::string> raw;

 private:
  ErrorCode code_;
};

}  // namespace vaxtract

#endif  // VAXTRACT_ERROR_HPP_
