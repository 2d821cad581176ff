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

#ifndef VAXTRACT_EVALUATOR_HPP_
#define VAXTRACT_EVALUATOR_HPP_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vaxtract/corpus.hpp"
#include "vaxtract/label.hpp"
#include "vaxtract/lexicon.hpp"

namespace vaxtract {

struct Prediction {
  std::string id;
  VaccineLabel label;
  // The answer before normalization; exact-match scoring compares this.
  std::optional<std::string> raw;

  static Prediction From(const ExtractionResult& r);
};

struct GoldRecord {
  std::string id;
  VaccineLabel gold;
};

// Throws kUnknownLabel when a note carries no gold label.
std::vector<GoldRecord> GoldFromDataset(const Dataset& dataset);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t tn = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  std::size_t total() const { return tp + tn + fp + fn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  // Set when the ratio had a zero denominator and was reported as 0.
  bool precision_undefined = false;
  bool recall_undefined = false;
  bool f1_undefined = false;
  friend bool operator==(const Metrics&, const Metrics&) = default;
};

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;

  double ratio() const { return total == 0 ? 0.0 : static_cast<double>(correct) / total; }
  friend bool operator==(const Tally&, const Tally&) = default;
};

struct NameAccuracy {
  Tally overall;
  Tally unspecified;  // notes whose gold label is Unspecified
};

// Named and Unspecified are vaccine-present; No is absent.
bool Binarize(const VaccineLabel& label);

// Predictions and golds are matched by id; the id sets must be identical.
ConfusionCounts Confusion(const std::vector<Prediction>& predictions,
                          const std::vector<GoldRecord>& golds);
Metrics ComputeMetrics(const ConfusionCounts& counts);

bool NameCorrect(const VaccineLabel& predicted, const VaccineLabel& gold, const Lexicon& lexicon);
NameAccuracy ComputeNameAccuracy(const std::vector<Prediction>& predictions,
                                 const std::vector<GoldRecord>& golds, const Lexicon& lexicon);

// Raw answer equal to the gold label string after trimming, case-sensitive.
bool ExactMatch(const Prediction& prediction, const GoldRecord& gold);
// Throws kEmptyInput for an empty set.
Tally ExactMatchRate(const std::vector<Prediction>& predictions,
                     const std::vector<GoldRecord>& golds);

// Round half up at `digits` decimals, returned as an integer count of
// 10^-digits units.
std::int64_t RoundHalfUpScaled(double x, int digits);
// Metric display: the value is reported at three decimals and the two-decimal
// display is derived from that report (0.97479 -> 0.975 -> "0.98").
std::string FormatMetric(double x);
// correct/total as a percentage rounded half up from the exact fraction.
std::string FormatPercent(std::size_t correct, std::size_t total, int decimals);

struct NoteOutcome {
  std::string id;
  VaccineLabel gold;
  VaccineLabel predicted;
  std::string presence;  // "TP", "TN", "FP" or "FN"
  bool name_correct = false;
  bool exact = false;
  friend bool operator==(const NoteOutcome&, const NoteOutcome&) = default;
};

struct EvalReport {
  static constexpr int kSchemaVersion = 1;

  int schema_version = kSchemaVersion;
  ConfusionCounts counts;
  Metrics metrics;
  Tally name_correct_all;
  Tally name_correct_unspecified;
  Tally exact_match;
  std::vector<NoteOutcome> per_note;
  std::string lexicon_version;
  std::string lexicon_hash;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

// Throws kEmptyInput for no predictions, kIdMismatch when ids disagree.
EvalReport Report(const std::vector<Prediction>& predictions,
                  const std::vector<GoldRecord>& golds, const Lexicon& lexicon);

void to_json(nlohmann::json& j, const EvalReport& report);
void from_json(const nlohmann::json& j, EvalReport& report);

// Aligned text tables: presence-level scoring, then name-level accuracy.
std::string RenderReportTable(const EvalReport& report, const std::string& model_name);

}  // namespace vaxtract

#endif  // VAXTRACT_EVALUATOR_HPP_
