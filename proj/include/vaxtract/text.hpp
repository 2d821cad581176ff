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

#ifndef VAXTRACT_TEXT_HPP_
#define VAXTRACT_TEXT_HPP_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vaxtract/label.hpp"

namespace vaxtract {

std::string ToLowerAscii(std::string_view s);
std::string_view TrimWhitespace(std::string_view s);

// Lookup key for surface forms: ASCII letters lowercased, every other ASCII
// character that is not a digit dropped. Non-ASCII bytes pass through. So
// "Rota-virus", "rota virus" and "ROTAVIRUS" share the key "rotavirus".
std::string FoldKey(std::string_view s);

// Levenshtein distance <= 1.
bool WithinEditDistanceOne(std::string_view a, std::string_view b);

enum class TokenKind {
  kWord,
  kPunct,     // ',', ':', '(' ... separates words inside a sentence
  kBoundary,  // '.', ';', '!', '?' ends a sentence
};

struct Token {
  std::string text;  // lowercased
  Span span;         // byte offsets into the original string
  TokenKind kind = TokenKind::kWord;
  // Hyphenated words also match joined and spaced: "rota-virus" carries
  // {"rotavirus", "rota virus"}. Empty for plain words.
  std::vector<std::string> variants;
};

// Splits triage shorthand into lowercased tokens. Clinical fractions ("2/7",
// "2/52"), slash abbreviations ("b/g"), decimals and hyphenated words stay
// single tokens. Sentence terminators become kBoundary markers.
std::vector<Token> NormalizeText(std::string_view raw);

// An age such as "6wo", "6 wk", "4mo", "12 month" or "4 years".
struct AgeQuantity {
  enum class Unit { kWeeks, kMonths, kYears };
  int value = 0;
  Unit unit = Unit::kWeeks;

  double days() const;
};

// Parses "<n><unit>" or "<n> <unit>" with an optional trailing "old".
// Clinical duration fractions ("2/52") are not ages and yield nullopt.
std::optional<AgeQuantity> ParseAgeQuantity(std::string_view phrase);

}  // namespace vaxtract

#endif  // VAXTRACT_TEXT_HPP_
