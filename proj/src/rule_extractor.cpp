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

#include "vaxtract/rule_extractor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace vaxtract {
namespace {

// A hyphen-separated piece of a word token. Pieces are the unit of surface
// matching so "rota-virus" can match "rotavirus" and "rota virus" alike.
struct Piece {
  std::string key;
  Span span;
  std::size_t token = 0;
  bool barrier = false;  // stands for a punctuation or boundary token
};

std::vector<Piece> SplitPieces(std::string_view text, const std::vector<Token>& tokens) {
  std::vector<Piece> pieces;
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    const Token& token = tokens[t];
    if (token.kind != TokenKind::kWord) {
      pieces.push_back({std::string(), token.span, t, true});
      continue;
    }
    std::size_t begin = token.span.begin;
    for (std::size_t i = token.span.begin; i <= token.span.end; ++i) {
      if (i == token.span.end || text[i] == '-') {
        if (i > begin) {
          pieces.push_back({FoldKey(text.substr(begin, i - begin)), {begin, i}, t, false});
        }
        begin = i + 1;
      }
    }
  }
  return pieces;
}

std::unordered_set<std::string> KeySet(const std::vector<std::string>& terms) {
  std::unordered_set<std::string> keys;
  for (const auto& term : terms) keys.insert(FoldKey(term));
  return keys;
}

bool TokenHasKey(const Token& token, const std::unordered_set<std::string>& keys) {
  if (keys.count(FoldKey(token.text)) != 0) return true;
  std::size_t begin = 0;
  for (std::size_t i = 0; i <= token.text.size(); ++i) {
    if (i == token.text.size() || token.text[i] == '-') {
      if (i > begin && keys.count(FoldKey(token.text.substr(begin, i - begin))) != 0) return true;
      begin = i + 1;
    }
  }
  return false;
}

// Word-token indices within `window` words of `token` on both sides.
std::vector<std::size_t> NeighbourWords(const std::vector<Token>& tokens, std::size_t token,
                                        std::size_t window) {
  std::vector<std::size_t> out;
  std::size_t seen = 0;
  for (std::size_t i = token; i-- > 0 && seen < window;) {
    if (tokens[i].kind == TokenKind::kWord) {
      out.push_back(i);
      ++seen;
    }
  }
  seen = 0;
  for (std::size_t i = token + 1; i < tokens.size() && seen < window; ++i) {
    if (tokens[i].kind == TokenKind::kWord) {
      out.push_back(i);
      ++seen;
    }
  }
  return out;
}

std::pair<std::size_t, std::size_t> SentenceOf(const std::vector<Token>& tokens,
                                               std::size_t token) {
  std::size_t begin = token;
  while (begin > 0 && tokens[begin - 1].kind != TokenKind::kBoundary) --begin;
  std::size_t end = token;
  while (end < tokens.size() && tokens[end].kind != TokenKind::kBoundary) ++end;
  return {begin, end};
}

const VaccineEntry* ClosestSchedulePoint(const Lexicon& lexicon, double days,
                                         double tolerance) {
  const VaccineEntry* best = nullptr;
  double best_gap = 0.0;
  for (const auto& entry : lexicon.entries()) {
    if (entry.kind != EntryKind::kSchedulePoint || !entry.schedule_age) continue;
    const double gap = std::abs(entry.schedule_age->days() - days);
    if (gap <= tolerance && (best == nullptr || gap < best_gap)) {
      best = &entry;
      best_gap = gap;
    }
  }
  return best;
}

}  // namespace

std::vector<NamedMatch> DetectNamed(std::string_view text, const std::vector<Token>& tokens,
                                    const Lexicon& lexicon) {
  const std::vector<Piece> pieces = SplitPieces(text, tokens);

  struct Candidate {
    std::size_t first;
    std::size_t last;
    const VaccineEntry* entry;
  };
  std::vector<Candidate> candidates;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    if (pieces[i].barrier) continue;
    std::string key;
    for (std::size_t j = i; j < pieces.size() && !pieces[j].barrier; ++j) {
      key += pieces[j].key;
      if (key.size() > lexicon.max_key_length()) break;
      const VaccineEntry* entry = lexicon.entry_for_key(key);
      if (entry != nullptr && entry->kind != EntryKind::kSchedulePoint) {
        candidates.push_back({i, j, entry});
      }
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Candidate& a, const Candidate& b) {
    const auto la = a.last - a.first;
    const auto lb = b.last - b.first;
    if (la != lb) return la > lb;
    return a.first < b.first;
  });
  std::vector<Candidate> chosen;
  for (const auto& c : candidates) {
    const bool overlaps = std::any_of(chosen.begin(), chosen.end(), [&c](const Candidate& o) {
      return c.first <= o.last && o.first <= c.last;
    });
    if (!overlaps) chosen.push_back(c);
  }
  std::sort(chosen.begin(), chosen.end(),
            [](const Candidate& a, const Candidate& b) { return a.first < b.first; });

  std::vector<NamedMatch> matches;
  for (const auto& c : chosen) {
    NamedMatch m;
    m.canonical_id = c.entry->canonical_id;
    m.span = {pieces[c.first].span.begin, pieces[c.last].span.end};
    m.surface = std::string(text.substr(m.span.begin, m.span.end - m.span.begin));
    m.first_token = pieces[c.first].token;
    m.last_token = pieces[c.last].token;
    matches.push_back(std::move(m));
  }
  return matches;
}

std::vector<GenericMatch> DetectGeneric(std::string_view text, const std::vector<Token>& tokens,
                                        const Lexicon& lexicon, const RuleConfig& config) {
  const std::vector<Piece> pieces = SplitPieces(text, tokens);
  const auto injection_keys = KeySet(lexicon.injection_words());
  const auto context_keys = KeySet(lexicon.non_vaccine_context());

  std::vector<GenericMatch> matches;
  for (const auto& piece : pieces) {
    if (piece.barrier || piece.key.empty()) continue;
    GenericMatch m;
    m.span = piece.span;
    m.surface = std::string(text.substr(piece.span.begin, piece.span.end - piece.span.begin));
    m.first_token = m.last_token = piece.token;

    for (const auto& trigger : lexicon.generic_triggers()) {
      const std::string trigger_key = FoldKey(trigger);
      if (piece.key == trigger_key) {
        m.trigger = trigger;
        break;
      }
    }
    if (m.trigger.empty() && config.fuzzy_generic &&
        lexicon.entry_for_key(piece.key) == nullptr) {
      for (const auto& trigger : lexicon.generic_triggers()) {
        const std::string trigger_key = FoldKey(trigger);
        if (trigger_key.size() >= config.fuzzy_min_length &&
            WithinEditDistanceOne(piece.key, trigger_key)) {
          m.trigger = trigger;
          break;
        }
      }
    }
    if (m.trigger.empty() && injection_keys.count(piece.key) != 0) {
      const auto neighbours = NeighbourWords(tokens, piece.token, config.context_window);
      const bool medication = std::any_of(
          neighbours.begin(), neighbours.end(),
          [&](std::size_t t) { return TokenHasKey(tokens[t], context_keys); });
      if (!medication) {
        m.trigger = piece.key;
        m.injection_word = true;
      }
    }
    if (!m.trigger.empty()) matches.push_back(std::move(m));
  }
  return matches;
}

bool PrecededByFutureCue(const std::vector<Token>& tokens, std::size_t token,
                         const Lexicon& lexicon, std::size_t window) {
  // Keys of the preceding words, nearest last.
  std::vector<std::string> before;
  for (std::size_t i = token; i-- > 0 && before.size() < window;) {
    if (tokens[i].kind == TokenKind::kBoundary) break;
    if (tokens[i].kind == TokenKind::kWord) before.push_back(FoldKey(tokens[i].text));
  }
  std::reverse(before.begin(), before.end());

  for (const auto& cue : lexicon.future_cues()) {
    std::vector<std::string> parts;
    for (const auto& t : NormalizeText(cue)) {
      if (t.kind == TokenKind::kWord) parts.push_back(FoldKey(t.text));
    }
    if (parts.empty() || parts.size() > before.size()) continue;
    for (std::size_t start = 0; start + parts.size() <= before.size(); ++start) {
      if (std::equal(parts.begin(), parts.end(), before.begin() + start)) return true;
    }
  }
  return false;
}

std::optional<SchedulePointMatch> SchedulePoint(const TriageNote& note,
                                                const std::vector<Token>& tokens,
                                                const GenericMatch& generic,
                                                const Lexicon& lexicon,
                                                const RuleConfig& config) {
  const std::size_t t = generic.first_token;

  // Age quantity directly before the trigger: "6wo", "6 wk", "6 week old".
  std::size_t end = t;
  if (end > 0 && tokens[end - 1].kind == TokenKind::kWord && tokens[end - 1].text == "old") {
    --end;
  }
  for (std::size_t width : {2u, 1u}) {
    if (end < width) continue;
    const std::size_t first = end - width;
    bool words = true;
    std::string phrase;
    for (std::size_t i = first; i < end; ++i) {
      words = words && tokens[i].kind == TokenKind::kWord;
      if (!phrase.empty()) phrase += ' ';
      phrase += tokens[i].text;
    }
    if (!words) continue;
    if (auto q = ParseAgeQuantity(phrase)) {
      if (const auto* entry =
              ClosestSchedulePoint(lexicon, q->days(), config.schedule_tolerance_days)) {
        return SchedulePointMatch{entry->canonical_id,
                                  {tokens[first].span.begin, generic.span.end}};
      }
      return std::nullopt;
    }
  }

  // Patient age near a schedule point, and the sentence reports the
  // vaccination as already given.
  const auto [begin, stop] = SentenceOf(tokens, t);
  const auto past_keys = KeySet(config.past_cues);
  bool occurred = false;
  for (std::size_t i = begin; i < stop && !occurred; ++i) {
    occurred = tokens[i].kind == TokenKind::kWord && TokenHasKey(tokens[i], past_keys);
  }
  if (!occurred) return std::nullopt;
  const double age_days = note.total_months() * 365.25 / 12.0;
  if (const auto* entry = ClosestSchedulePoint(lexicon, age_days, config.schedule_tolerance_days)) {
    return SchedulePointMatch{entry->canonical_id, generic.span};
  }
  return std::nullopt;
}

ExtractionResult ExtractWithRules(const TriageNote& note, const Lexicon& lexicon,
                                  const RuleConfig& config) {
  ExtractionResult result;
  result.note_id = note.id;
  result.engine = Engine::kRules;

  const std::vector<Token> tokens = NormalizeText(note.text);
  auto substr = [&note](Span s) { return note.text.substr(s.begin, s.end - s.begin); };

  const auto all_named = DetectNamed(note.text, tokens, lexicon);
  const auto named = FutureFilter(all_named, tokens, lexicon, config);
  if (!named.empty()) {
    result.label = VaccineLabel::Named(named.front().canonical_id, named.front().surface);
    result.matched_span = named.front().span;
  } else {
    auto generic = FutureFilter(DetectGeneric(note.text, tokens, lexicon, config), tokens, lexicon, config);
    // "not yet had his MMR vaccine": the trailing generic word belongs to the
    // cancelled named mention, so it goes too.
    std::erase_if(generic, [&](const GenericMatch& g) {
      return std::any_of(all_named.begin(), all_named.end(), [&](const NamedMatch& n) {
        return g.first_token >= n.first_token && g.first_token <= n.last_token + 1;
      });
    });
    for (const auto& g : generic) {
      if (auto point = SchedulePoint(note, tokens, g, lexicon, config)) {
        result.label = VaccineLabel::Named(point->canonical_id, substr(point->span));
        result.matched_span = point->span;
        break;
      }
    }
    if (!result.matched_span && !generic.empty()) {
      result.label = VaccineLabel::Unspecified();
      result.matched_span = generic.front().span;
    }
  }
  result.exact_match_surface = result.label.label_string();
  return result;
}

}  // namespace vaxtract
