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

#ifndef VAXTRACT_LEXICON_HPP_
#define VAXTRACT_LEXICON_HPP_

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "vaxtract/text.hpp"

namespace vaxtract {

enum class EntryKind { kDiseaseNamed, kBrand, kSchedulePoint };

std::string_view to_string(EntryKind kind);

struct VaccineEntry {
  std::string canonical_id;
  // Always contains the canonical id itself.
  std::vector<std::string> surfaces;
  EntryKind kind = EntryKind::kDiseaseNamed;
  // Schedule points only: the age the canonical id names.
  std::optional<AgeQuantity> schedule_age;
};

// Canonical vaccine identities and the trigger vocabularies used by the rule
// engine. Immutable after Load.
//
// File format (JSON):
//   { "version": "...",                      optional
//     "entries": [ { "canonical_id": "Influenza",
//                    "kind": "disease-named" | "brand" | "schedule-point",
//                    "surfaces": ["flu vax", ...] } ],
//     "generic_triggers": [...], "injection_words": [...],
//     "non_vaccine_context": [...], "future_cues": [...] }
//
// Surfaces are compared by FoldKey. Each folded surface belongs to exactly
// one entry, and no generic trigger may fold onto an entry surface.
class Lexicon {
 public:
  static Lexicon Load(std::istream& in);
  static Lexicon LoadFile(const std::string& path);
  static Lexicon Parse(std::string_view json_text);

  const std::vector<VaccineEntry>& entries() const { return entries_; }
  const VaccineEntry* find_entry(std::string_view canonical_id) const;
  bool has_canonical(std::string_view canonical_id) const {
    return find_entry(canonical_id) != nullptr;
  }

  std::optional<std::string> canonical_of(std::string_view surface) const;
  // Folded-key lookup; the key must already be FoldKey output.
  const VaccineEntry* entry_for_key(std::string_view key) const;

  // True when both strings resolve to the same canonical id, or when they are
  // equal after folding.
  bool equivalent(std::string_view a, std::string_view b) const;
  // Label-level equivalence: same variant, and for Named labels equivalent
  // canonical ids.
  bool equivalent(const VaccineLabel& a, const VaccineLabel& b) const;

  const std::vector<std::string>& generic_triggers() const { return generic_triggers_; }
  const std::vector<std::string>& injection_words() const { return injection_words_; }
  const std::vector<std::string>& non_vaccine_context() const { return non_vaccine_context_; }
  const std::vector<std::string>& future_cues() const { return future_cues_; }

  // Longest entry surface, counted in whitespace/hyphen separated pieces.
  std::size_t max_surface_pieces() const { return max_surface_pieces_; }
  // Longest folded surface key, in bytes.
  std::size_t max_key_length() const { return max_key_length_; }

  const std::string& version() const { return version_; }
  // SHA-256 of the source bytes, hex.
  const std::string& content_hash() const { return content_hash_; }

 private:
  Lexicon() = default;

  std::vector<VaccineEntry> entries_;
  std::unordered_map<std::string, std::size_t> by_key_;
  std::unordered_map<std::string, std::size_t> by_canonical_;
  std::vector<std::string> generic_triggers_;
  std::vector<std::string> injection_words_;
  std::vector<std::string> non_vaccine_context_;
  std::vector<std::string> future_cues_;
  std::size_t max_surface_pieces_ = 1;
  std::size_t max_key_length_ = 0;
  std::string version_;
  std::string content_hash_;
};

// Hex SHA-256 of arbitrary bytes.
std::string Sha256Hex(std::string_view bytes);

}  // namespace vaxtract

#endif  // VAXTRACT_LEXICON_HPP_
