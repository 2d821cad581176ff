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

#include "vaxtract/lexicon.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <fstream>
#include <iterator>
#include <memory>
#include <set>
#include <sstream>

#include "vaxtract/error.hpp"

namespace vaxtract {
namespace {

using nlohmann::json;

[[noreturn]] void Fail(const std::string& message) {
  throw Error(ErrorCode::kLexiconInvalid, message);
}

EntryKind ParseKind(const std::string& s) {
  if (s == "disease-named") return EntryKind::kDiseaseNamed;
  if (s == "brand") return EntryKind::kBrand;
  if (s == "schedule-point") return EntryKind::kSchedulePoint;
  Fail("unknown entry kind '" + s + "'");
}

std::size_t CountPieces(std::string_view surface) {
  std::size_t pieces = 0;
  bool in_piece = false;
  for (char c : surface) {
    const bool sep = c == ' ' || c == '-' || c == '\t';
    if (!sep && !in_piece) ++pieces;
    in_piece = !sep;
  }
  return pieces;
}

std::vector<std::string> ReadTermSet(const json& root, const char* key) {
  auto it = root.find(key);
  if (it == root.end() || !it->is_array()) Fail(std::string("missing required set '") + key + "'");
  std::vector<std::string> out;
  for (const auto& v : *it) {
    if (!v.is_string()) Fail(std::string("non-string member in '") + key + "'");
    auto term = ToLowerAscii(TrimWhitespace(v.get<std::string>()));
    if (FoldKey(term).empty()) Fail(std::string("empty term in '") + key + "'");
    if (std::find(out.begin(), out.end(), term) == out.end()) out.push_back(std::move(term));
  }
  if (out.empty()) Fail(std::string("required set '") + key + "' is empty");
  return out;
}

}  // namespace

std::string_view to_string(EntryKind kind) {
  switch (kind) {
    case EntryKind::kDiseaseNamed: return "disease-named";
    case EntryKind::kBrand: return "brand";
    case EntryKind::kSchedulePoint: return "schedule-point";
  }
  return "disease-named";
}

std::string Sha256Hex(std::string_view bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              &EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1) {
    throw Error(ErrorCode::kIo, "sha256 failed");
  }
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

Lexicon Lexicon::Load(std::istream& in) {
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return Parse(text);
}

Lexicon Lexicon::LoadFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open lexicon '" + path + "'");
  return Load(in);
}

Lexicon Lexicon::Parse(std::string_view json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    Fail(std::string("lexicon is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) Fail("lexicon root must be an object");

  Lexicon lex;
  lex.content_hash_ = Sha256Hex(json_text);
  lex.version_ = root.value("version", std::string());

  auto entries = root.find("entries");
  if (entries == root.end() || !entries->is_array() || entries->empty()) {
    Fail("required set 'entries' is missing or empty");
  }
  for (const auto& e : *entries) {
    VaccineEntry entry;
    entry.canonical_id = e.at("canonical_id").get<std::string>();
    if (FoldKey(entry.canonical_id).empty()) Fail("entry with empty canonical_id");
    entry.kind = ParseKind(e.value("kind", std::string("disease-named")));
    if (lex.by_canonical_.count(entry.canonical_id) != 0) {
      Fail("duplicate canonical_id '" + entry.canonical_id + "'");
    }
    if (entry.kind == EntryKind::kSchedulePoint) {
      entry.schedule_age = ParseAgeQuantity(entry.canonical_id);
      if (!entry.schedule_age) {
        Fail("schedule-point '" + entry.canonical_id + "' does not name an age");
      }
    }

    std::vector<std::string> surfaces = {entry.canonical_id};
    for (const auto& s : e.value("surfaces", json::array())) {
      surfaces.push_back(std::string(TrimWhitespace(s.get<std::string>())));
    }
    const std::size_t index = lex.entries_.size();
    std::set<std::string> own_keys;
    for (auto& surface : surfaces) {
      const std::string key = FoldKey(surface);
      if (key.empty()) Fail("empty surface under '" + entry.canonical_id + "'");
      if (!own_keys.insert(key).second) continue;
      auto [it, inserted] = lex.by_key_.emplace(key, index);
      if (!inserted) {
        Fail("ambiguous surface '" + surface + "' maps to both '" +
             lex.entries_[it->second].canonical_id + "' and '" + entry.canonical_id + "'");
      }
      lex.max_surface_pieces_ = std::max(lex.max_surface_pieces_, CountPieces(surface));
      lex.max_key_length_ = std::max(lex.max_key_length_, key.size());
      entry.surfaces.push_back(surface);
    }
    lex.by_canonical_.emplace(entry.canonical_id, index);
    lex.entries_.push_back(std::move(entry));
  }

  lex.generic_triggers_ = ReadTermSet(root, "generic_triggers");
  lex.injection_words_ = ReadTermSet(root, "injection_words");
  lex.non_vaccine_context_ = ReadTermSet(root, "non_vaccine_context");
  lex.future_cues_ = ReadTermSet(root, "future_cues");

  for (const auto& trigger : lex.generic_triggers_) {
    if (auto it = lex.by_key_.find(FoldKey(trigger)); it != lex.by_key_.end()) {
      Fail("generic trigger '" + trigger + "' collides with a surface of '" +
           lex.entries_[it->second].canonical_id + "'");
    }
  }
  return lex;
}

const VaccineEntry* Lexicon::find_entry(std::string_view canonical_id) const {
  auto it = by_canonical_.find(std::string(canonical_id));
  return it == by_canonical_.end() ? nullptr : &entries_[it->second];
}

const VaccineEntry* Lexicon::entry_for_key(std::string_view key) const {
  auto it = by_key_.find(std::string(key));
  return it == by_key_.end() ? nullptr : &entries_[it->second];
}

std::optional<std::string> Lexicon::canonical_of(std::string_view surface) const {
  const VaccineEntry* entry = entry_for_key(FoldKey(surface));
  if (entry == nullptr) return std::nullopt;
  return entry->canonical_id;
}

bool Lexicon::equivalent(std::string_view a, std::string_view b) const {
  const auto ca = canonical_of(a);
  if (ca && ca == canonical_of(b)) return true;
  return FoldKey(a) == FoldKey(b);
}

bool Lexicon::equivalent(const VaccineLabel& a, const VaccineLabel& b) const {
  if (a.variant() != b.variant()) return false;
  if (!a.is_named()) return true;
  return equivalent(a.canonical_id(), b.canonical_id());
}

}  // namespace vaxtract
