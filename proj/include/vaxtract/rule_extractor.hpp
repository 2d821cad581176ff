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

#ifndef VAXTRACT_RULE_EXTRACTOR_HPP_
#define VAXTRACT_RULE_EXTRACTOR_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "vaxtract/corpus.hpp"
#include "vaxtract/label.hpp"
#include "vaxtract/lexicon.hpp"
#include "vaxtract/text.hpp"

namespace vaxtract {

// Rule-engine tunables. Defaults are the shipped configuration.
struct RuleConfig {
  // A future cue cancels a match when it lies within this many word tokens
  // before the match, in the same sentence.
  std::size_t future_cue_window = 4;
  // An injection word only counts as a vaccination when no non-vaccine
  // context term is within this many word tokens on either side.
  std::size_t context_window = 3;
  // Patient age (or a quoted age) this close to a schedule point resolves an
  // unnamed vaccination to that point.
  double schedule_tolerance_days = 14.0;
  // Edit-distance-1 matching of generic triggers ("immms" -> "imms").
  bool fuzzy_generic = true;
  std::size_t fuzzy_min_length = 4;
  // Words saying a vaccination already happened; needed before patient age
  // alone may resolve a schedule point.
  std::vector<std::string> past_cues = {"yesterday", "ago", "post", "after", "following",
                                        "had", "received", "given", "recent", "recently",
                                        "last", "prior", "since"};
};

// Token indices below refer to the NormalizeText output.
struct NamedMatch {
  std::string canonical_id;
  std::string surface;  // the note text as written
  Span span;
  std::size_t first_token = 0;
  std::size_t last_token = 0;
};

struct GenericMatch {
  std::string surface;  // the note text as written, e.g. "immms"
  std::string trigger;  // lexicon term it matched, e.g. "imms"
  bool injection_word = false;
  Span span;
  std::size_t first_token = 0;
  std::size_t last_token = 0;
};

// Case- and hyphen-insensitive matching of entry surfaces, schedule points
// excluded. Overlaps resolve to the longest candidate (in word pieces),
// ties to the leftmost; the result is in text order.
std::vector<NamedMatch> DetectNamed(std::string_view text, const std::vector<Token>& tokens,
                                    const Lexicon& lexicon);

std::vector<GenericMatch> DetectGeneric(std::string_view text, const std::vector<Token>& tokens,
                                        const Lexicon& lexicon, const RuleConfig& config = {});

// True when a future cue ends inside the window of word tokens before
// `token`, with no sentence boundary between them.
bool PrecededByFutureCue(const std::vector<Token>& tokens, std::size_t token,
                         const Lexicon& lexicon, std::size_t window);

template <typename Match>
std::vector<Match> FutureFilter(std::vector<Match> matches, const std::vector<Token>& tokens,
                                const Lexicon& lexicon, const RuleConfig& config = {}) {
  std::erase_if(matches, [&](const Match& m) {
    return PrecededByFutureCue(tokens, m.first_token, lexicon, config.future_cue_window);
  });
  return matches;
}

struct SchedulePointMatch {
  std::string canonical_id;
  Span span;  // the age quantity plus the trigger, or just the trigger
};

// Resolves an unnamed vaccination to a schedule point: either an age
// quantity directly before the trigger ("6wo vaccinations"), or a patient age
// within tolerance of a schedule point when the sentence says the
// vaccination already happened.
std::optional<SchedulePointMatch> SchedulePoint(const TriageNote& note,
                                                const std::vector<Token>& tokens,
                                                const GenericMatch& generic,
                                                const Lexicon& lexicon,
                                                const RuleConfig& config = {});

// The full cascade: first surviving named match, else a schedule point or
// Unspecified for the first surviving generic match, else No.
ExtractionResult ExtractWithRules(const TriageNote& note, const Lexicon& lexicon,
                                  const RuleConfig& config = {});

}  // namespace vaxtract

#endif  // VAXTRACT_RULE_EXTRACTOR_HPP_
