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

#include "vaxtract/error.hpp"

namespace vaxtract {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "malformed_record";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kUnknownLabel: return "unknown_label";
    case ErrorCode::kMissingAgePrefix: return "missing_age_prefix";
    case ErrorCode::kAgeOutOfRange: return "age_out_of_range";
    case ErrorCode::kEmptyTemplates: return "empty_templates";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kLexiconInvalid: return "lexicon_invalid";
    case ErrorCode::kParseFailure: return "parse_failure";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kTransport: return "transport_error";
    case ErrorCode::kHttpStatus: return "http_status_error";
    case ErrorCode::kRetryExhausted: return "retry_exhausted";
    case ErrorCode::kIdMismatch: return "id_mismatch";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kUnknownRecord: return "unknown_record";
    case ErrorCode::kLeaseViolation: return "lease_violation";
    case ErrorCode::kIdenticalCorrection: return "identical_correction";
    case ErrorCode::kNoDualReviews: return "no_dual_reviews";
    case ErrorCode::kNothingToExport: return "nothing_to_export";
    case ErrorCode::kConfig: return "invalid_config";
    case ErrorCode::kIo: return "io_error";
  }
  return "unknown";
}

}  // namespace vaxtract
