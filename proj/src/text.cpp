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

#include "vaxtract/text.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace vaxtract {
namespace {

bool IsAsciiAlnum(unsigned char c) { return std::isalnum(c) != 0 && c < 0x80; }
bool IsAsciiDigit(unsigned char c) { return c >= '0' && c <= '9'; }
bool IsAsciiAlpha(unsigned char c) { return c < 0x80 && std::isalpha(c) != 0; }
bool IsWordByte(unsigned char c) { return IsAsciiAlnum(c) || c >= 0x80; }
bool IsSpace(unsigned char c) { return c < 0x80 && std::isspace(c) != 0; }
bool IsBoundary(unsigned char c) {
  return c == '.' || c == ';' || c == '!' || c == '?';
}

// Whether s[j] glues the characters on either side into one token.
bool IsJoiner(std::string_view s, std::size_t j) {
  if (j == 0 || j + 1 >= s.size()) return false;
  const auto prev = static_cast<unsigned char>(s[j - 1]);
  const auto next = static_cast<unsigned char>(s[j + 1]);
  switch (s[j]) {
    case '-': return IsWordByte(prev) && IsWordByte(next);
    case '/': return IsAsciiAlnum(prev) && IsAsciiAlnum(next);
    case '.': return IsAsciiDigit(prev) && IsAsciiDigit(next);
    case '\'': return IsAsciiAlpha(prev) && IsAsciiAlpha(next);
    default: return false;
  }
}

}  // namespace

std::string ToLowerAscii(std::string_view s) {
  std::string out(s);
  for (auto& c : out) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

std::string_view TrimWhitespace(std::string_view s) {
  while (!s.empty() && IsSpace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && IsSpace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::string FoldKey(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    const auto u = static_cast<unsigned char>(c);
    if (u >= 0x80) {
      out.push_back(c);
    } else if (std::isalnum(u)) {
      out.push_back(static_cast<char>(std::tolower(u)));
    }
  }
  return out;
}

bool WithinEditDistanceOne(std::string_view a, std::string_view b) {
  if (a.size() > b.size()) std::swap(a, b);
  if (b.size() - a.size() > 1) return false;
  std::size_t i = 0;
  while (i < a.size() && a[i] == b[i]) ++i;
  if (i == a.size()) return true;  // equal, or one trailing insertion
  const std::size_t skip_a = a.size() == b.size() ? 1 : 0;
  return std::equal(a.begin() + static_cast<std::ptrdiff_t>(i + skip_a), a.end(),
                    b.begin() + static_cast<std::ptrdiff_t>(i + 1), b.end());
}

std::vector<Token> NormalizeText(std::string_view raw) {
  std::vector<Token> tokens;
  std::size_t i = 0;
  while (i < raw.size()) {
    const auto c = static_cast<unsigned char>(raw[i]);
    if (IsSpace(c)) {
      ++i;
      continue;
    }
    if (IsWordByte(c)) {
      std::size_t j = i + 1;
      bool hyphenated = false;
      while (j < raw.size()) {
        if (IsWordByte(static_cast<unsigned char>(raw[j]))) {
          ++j;
        } else if (IsJoiner(raw, j)) {
          hyphenated = hyphenated || raw[j] == '-';
          ++j;
        } else {
          break;
        }
      }
      Token t;
      t.text = ToLowerAscii(raw.substr(i, j - i));
      t.span = {i, j};
      if (hyphenated) {
        std::string joined;
        std::string spaced = t.text;
        std::copy_if(t.text.begin(), t.text.end(), std::back_inserter(joined),
                     [](char ch) { return ch != '-'; });
        std::replace(spaced.begin(), spaced.end(), '-', ' ');
        t.variants = {std::move(joined), std::move(spaced)};
      }
      tokens.push_back(std::move(t));
      i = j;
      continue;
    }
    Token t;
    t.text = std::string(1, static_cast<char>(c));
    t.span = {i, i + 1};
    t.kind = IsBoundary(c) ? TokenKind::kBoundary : TokenKind::kPunct;
    tokens.push_back(std::move(t));
    ++i;
  }
  return tokens;
}

double AgeQuantity::days() const {
  switch (unit) {
    case Unit::kWeeks: return 7.0 * value;
    case Unit::kMonths: return 365.25 / 12.0 * value;
    case Unit::kYears: return 365.25 * value;
  }
  return 0.0;
}

std::optional<AgeQuantity> ParseAgeQuantity(std::string_view phrase) {
  static const std::regex kPattern(R"(^(\d{1,3})\s*([a-z]+)(\s*old)?$)");
  const std::string s = ToLowerAscii(TrimWhitespace(phrase));
  std::smatch m;
  if (!std::regex_match(s, m, kPattern)) return std::nullopt;
  const std::string unit = m[2].str();
  AgeQuantity q;
  q.value = std::stoi(m[1].str());
  static const std::vector<std::string> kWeeks = {"w", "wk", "wks", "wko", "wo",
                                                  "week", "weeks", "wkold"};
  static const std::vector<std::string> kMonths = {"m", "mo", "mos", "mth", "mths",
                                                   "mon", "month", "months", "mnth"};
  static const std::vector<std::string> kYears = {"y", "yo", "yr", "yrs", "year",
                                                  "years", "yro"};
  auto in = [&unit](const std::vector<std::string>& set) {
    return std::find(set.begin(), set.end(), unit) != set.end();
  };
  if (in(kWeeks)) {
    q.unit = AgeQuantity::Unit::kWeeks;
  } else if (in(kMonths)) {
    q.unit = AgeQuantity::Unit::kMonths;
  } else if (in(kYears)) {
    q.unit = AgeQuantity::Unit::kYears;
  } else {
    return std::nullopt;
  }
  return q;
}

}  // namespace vaxtract
