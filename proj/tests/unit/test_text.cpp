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

#include <gtest/gtest.h>

#include <random>
#include <string>
#include <vector>

#include "vaxtract/text.hpp"

namespace vaxtract {
namespace {

// Textbook dynamic-programming edit distance.
std::size_t Levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1,
                          d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

std::vector<std::string> Texts(const std::vector<Token>& tokens) {
  std::vector<std::string> out;
  for (const auto& t : tokens) out.push_back(t.text);
  return out;
}

TEST(FoldKey, DropsCaseSpacesAndPunctuation) {
  EXPECT_EQ(FoldKey("Rota-virus"), "rotavirus");
  EXPECT_EQ(FoldKey("rota virus"), "rotavirus");
  EXPECT_EQ(FoldKey("ROTAVIRUS"), "rotavirus");
  EXPECT_EQ(FoldKey("Hep B"), "hepb");
  EXPECT_EQ(FoldKey("COVID-19"), "covid19");
  EXPECT_EQ(FoldKey(""), "");
  EXPECT_EQ(FoldKey("--"), "");
}

TEST(FoldKey, KeepsNonAsciiBytes) {
  EXPECT_EQ(FoldKey("Gardasil\xC2\xAE"), "gardasil\xC2\xAE");
}

TEST(TrimWhitespace, TrimsBothEnds) {
  EXPECT_EQ(TrimWhitespace("  a b \t\n"), "a b");
  EXPECT_EQ(TrimWhitespace("   "), "");
}

TEST(EditDistance, KnownPairs) {
  EXPECT_TRUE(WithinEditDistanceOne("immms", "imms"));
  EXPECT_TRUE(WithinEditDistanceOne("vacines", "vaccines"));
  EXPECT_TRUE(WithinEditDistanceOne("imms", "imms"));
  EXPECT_TRUE(WithinEditDistanceOne("", "a"));
  EXPECT_FALSE(WithinEditDistanceOne("vacinnation", "vaccination"));
  EXPECT_FALSE(WithinEditDistanceOne("ab", "ba"));
}

TEST(EditDistance, AgreesWithDynamicProgrammingOracle) {
  std::mt19937 rng(12345);
  std::uniform_int_distribution<int> len(0, 6);
  std::uniform_int_distribution<int> letter(0, 2);
  for (int trial = 0; trial < 20000; ++trial) {
    std::string a, b;
    for (int i = len(rng); i > 0; --i) a += static_cast<char>('a' + letter(rng));
    for (int i = len(rng); i > 0; --i) b += static_cast<char>('a' + letter(rng));
    ASSERT_EQ(WithinEditDistanceOne(a, b), Levenshtein(a, b) <= 1) << a << " vs " << b;
  }
}

TEST(NormalizeText, KeepsClinicalShorthandTogether) {
  const auto tokens = NormalizeText("fever, runny nose, sob on b/g of flu vax 2/7 ago");
  EXPECT_EQ(Texts(tokens), (std::vector<std::string>{"fever", ",", "runny", "nose", ",", "sob", "on",
                                                     "b/g", "of", "flu", "vax", "2/7", "ago"}));
  EXPECT_EQ(tokens[1].kind, TokenKind::kPunct);
  EXPECT_EQ(tokens[7].kind, TokenKind::kWord);
}

TEST(NormalizeText, SentenceBoundariesAndDecimals) {
  const auto tokens = NormalizeText("T 38.5. Afebrile; HR 120!");
  EXPECT_EQ(Texts(tokens), (std::vector<std::string>{"t", "38.5", ".", "afebrile", ";", "hr", "120", "!"}));
  EXPECT_EQ(tokens[2].kind, TokenKind::kBoundary);
  EXPECT_EQ(tokens[4].kind, TokenKind::kBoundary);
}

TEST(NormalizeText, HyphenatedWordsCarryVariants) {
  const auto tokens = NormalizeText("vomit post Rota-virus vaccine");
  ASSERT_EQ(tokens.size(), 4u);
  EXPECT_EQ(tokens[2].text, "rota-virus");
  EXPECT_EQ(tokens[2].variants, (std::vector<std::string>{"rotavirus", "rota virus"}));
  EXPECT_TRUE(tokens[0].variants.empty());
}

TEST(NormalizeText, SpansPointIntoTheOriginal) {
  const std::string raw = "Had  Boostrix, today";
  for (const auto& t : NormalizeText(raw)) {
    EXPECT_EQ(ToLowerAscii(raw.substr(t.span.begin, t.span.end - t.span.begin)), t.text);
  }
}

TEST(NormalizeText, EmptyAndWhitespace) {
  EXPECT_TRUE(NormalizeText("").empty());
  EXPECT_TRUE(NormalizeText(" \t ").empty());
}

TEST(AgeQuantity, ParsesScheduleShorthand) {
  auto q = ParseAgeQuantity("6wo");
  ASSERT_TRUE(q);
  EXPECT_EQ(q->value, 6);
  EXPECT_EQ(q->unit, AgeQuantity::Unit::kWeeks);
  EXPECT_DOUBLE_EQ(q->days(), 42.0);

  q = ParseAgeQuantity("4 mths");
  ASSERT_TRUE(q);
  EXPECT_EQ(q->unit, AgeQuantity::Unit::kMonths);

  q = ParseAgeQuantity("12 month old");
  ASSERT_TRUE(q);
  EXPECT_EQ(q->value, 12);

  q = ParseAgeQuantity("4yo");
  ASSERT_TRUE(q);
  EXPECT_EQ(q->unit, AgeQuantity::Unit::kYears);
  EXPECT_DOUBLE_EQ(q->days(), 4 * 365.25);
}

TEST(AgeQuantity, RejectsDurationsAndWords) {
  EXPECT_FALSE(ParseAgeQuantity("2/52"));
  EXPECT_FALSE(ParseAgeQuantity("flu"));
  EXPECT_FALSE(ParseAgeQuantity("6"));
  EXPECT_FALSE(ParseAgeQuantity("6 apples"));
}

}  // namespace
}  // namespace vaxtract
