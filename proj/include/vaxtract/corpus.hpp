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

#ifndef VAXTRACT_CORPUS_HPP_
#define VAXTRACT_CORPUS_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vaxtract/label.hpp"

namespace vaxtract {

class Lexicon;

// One emergency-department presentation.
struct TriageNote {
  std::string id;
  int age_years = 0;
  int age_months = 0;  // 0..11
  std::string text;    // triage shorthand without the age prefix
  std::optional<VaccineLabel> gold;

  int total_months() const { return 12 * age_years + age_months; }

  friend bool operator==(const TriageNote&, const TriageNote&) = default;
};

// Throws kMalformedRecord when an invariant of TriageNote does not hold.
void ValidateNote(const TriageNote& note);

struct ClassCounts {
  std::size_t present = 0;    // gold Named or Unspecified
  std::size_t absent = 0;     // gold No
  std::size_t unlabeled = 0;
  friend bool operator==(const ClassCounts&, const ClassCounts&) = default;
};

struct Dataset {
  std::string name;
  std::vector<TriageNote> notes;

  ClassCounts class_counts() const;
  bool fully_labeled() const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

enum class NoteFormat { kJsonl, kCsv };

// Reads a note file. Every record is validated; ids must be unique. Gold
// labels use the file encoding ("No", "Unspecified" or a canonical id); when
// a lexicon is supplied, named gold labels must be canonical ids in it.
// Errors carry the 1-based line number of the offending record.
Dataset LoadNotes(std::istream& in, NoteFormat format, std::string name = {},
                  const Lexicon* lexicon = nullptr);
Dataset LoadNotesFile(const std::string& path, const Lexicon* lexicon = nullptr);

// Canonical JSONL encoding; LF line endings, keys in declaration order.
std::string NoteToJsonLine(const TriageNote& note);
nlohmann::ordered_json NoteToJson(const TriageNote& note);
// Validates like LoadNotes; throws kMalformedRecord / kUnknownLabel.
TriageNote NoteFromJson(const nlohmann::json& j);
void WriteNotesJsonl(std::ostream& out, const Dataset& dataset);

struct ParsedAge {
  int years = 0;
  int months = 0;
  std::string remainder;
};

// Splits "Age: 0Y 4M. <text>" (also "Age: 5M.", "13Y 2 M", no trailing
// period) into the age and the trimmed remainder. A months-only prefix may
// exceed 11 and is carried into years.
ParsedAge ParseAgePrefix(std::string_view raw);

// "Age: <Y>Y <M>M." for the given note.
std::string FormatAgePrefix(const TriageNote& note);

// Template set for the synthetic generator. Slot values may carry a
// canonical id; a template gold of "$slot" takes the canonical id of the
// value drawn for that slot.
struct SlotValue {
  std::string surface;
  std::string canonical;  // empty when the value names no vaccine
};

struct NoteTemplate {
  std::string text;  // with {slot} placeholders
  std::string gold;  // "No", "Unspecified", a canonical id, or "$slot"
  int min_age_months = 0;
  int max_age_months = 18 * 12;
};

struct TemplateSet {
  std::string version;
  std::map<std::string, std::vector<SlotValue>> slots;
  std::vector<NoteTemplate> templates;
};

TemplateSet LoadTemplates(std::istream& in);
TemplateSet LoadTemplatesFile(const std::string& path);

// Deterministic in (seed, n, vaccine_fraction, templates). Exactly
// round(n * vaccine_fraction) notes carry a vaccine-present gold label.
Dataset GenerateSynthetic(std::uint64_t seed, std::size_t n,
                          double vaccine_fraction, const TemplateSet& templates);

}  // namespace vaxtract

#endif  // VAXTRACT_CORPUS_HPP_
