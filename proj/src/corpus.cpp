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

#include "vaxtract/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <cstdio>
#include <istream>
#include <limits>
#include <random>
#include <regex>
#include <set>
#include <sstream>

#include "vaxtract/error.hpp"
#include "vaxtract/lexicon.hpp"
#include "vaxtract/text.hpp"

namespace vaxtract {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

Error RecordError(ErrorCode code, std::size_t line, const std::string& message) {
  if (line == 0) return Error(code, message);
  Error e(code, "line " + std::to_string(line) + ": " + message);
  e.line = line;
  return e;
}

VaccineLabel ParseGold(const std::string& s, const Lexicon* lexicon, std::size_t line) {
  if (s.empty()) throw RecordError(ErrorCode::kUnknownLabel, line, "empty gold label");
  auto label = VaccineLabel::FromLabelString(s);
  if (label.is_named() && lexicon != nullptr && !lexicon->has_canonical(s)) {
    throw RecordError(ErrorCode::kUnknownLabel, line, "unknown label string '" + s + "'");
  }
  return label;
}

int ParseIntField(const std::string& s, const char* field, std::size_t line) {
  const auto trimmed = TrimWhitespace(s);
  int value = 0;
  std::size_t used = 0;
  try {
    value = std::stoi(std::string(trimmed), &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (trimmed.empty() || used != trimmed.size()) {
    throw RecordError(ErrorCode::kMalformedRecord, line,
                      std::string("field '") + field + "' is not an integer");
  }
  return value;
}

TriageNote RecordFromJson(const json& j, const Lexicon* lexicon, std::size_t line) {
  if (!j.is_object()) throw RecordError(ErrorCode::kMalformedRecord, line, "record is not an object");
  static const std::set<std::string> kAllowed = {"id", "age_years", "age_months", "text", "gold"};
  for (const auto& item : j.items()) {
    if (kAllowed.count(item.key()) == 0) {
      throw RecordError(ErrorCode::kMalformedRecord, line, "unexpected field '" + item.key() + "'");
    }
  }
  TriageNote note;
  try {
    note.id = j.at("id").get<std::string>();
    note.age_years = j.at("age_years").get<int>();
    note.age_months = j.at("age_months").get<int>();
    note.text = j.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw RecordError(ErrorCode::kMalformedRecord, line, e.what());
  }
  if (auto it = j.find("gold"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw RecordError(ErrorCode::kUnknownLabel, line, "gold must be a string");
    note.gold = ParseGold(it->get<std::string>(), lexicon, line);
  }
  return note;
}

// RFC 4180 records: quoted fields may hold commas, doubled quotes and line
// breaks. Returns false at end of input.
bool ReadCsvRecord(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool quoted = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line;
      break;
    } else if (c != '\r') {
      field.push_back(c);
    }
  }
  if (!any) return false;
  if (quoted) throw RecordError(ErrorCode::kMalformedRecord, line, "unterminated quoted field");
  fields.push_back(std::move(field));
  return true;
}

Dataset LoadJsonl(std::istream& in, const Lexicon* lexicon) {
  Dataset dataset;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (TrimWhitespace(raw).empty()) continue;
    json j;
    try {
      j = json::parse(raw);
    } catch (const json::parse_error& e) {
      throw RecordError(ErrorCode::kMalformedRecord, line, e.what());
    }
    auto note = RecordFromJson(j, lexicon, line);
    try {
      ValidateNote(note);
    } catch (const Error& e) {
      throw RecordError(e.code(), line, e.what());
    }
    dataset.notes.push_back(std::move(note));
  }
  return dataset;
}

Dataset LoadCsv(std::istream& in, const Lexicon* lexicon) {
  Dataset dataset;
  std::size_t line = 1;
  std::vector<std::string> header;
  if (!ReadCsvRecord(in, header, line)) return dataset;
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);
  auto column = [&header](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (TrimWhitespace(header[i]) == name) return i;
    }
    return std::nullopt;
  };
  const auto id_col = column("id");
  const auto years_col = column("age_years");
  const auto months_col = column("age_months");
  const auto text_col = column("text");
  const auto gold_col = column("gold");
  if (!id_col || !years_col || !months_col || !text_col) {
    throw RecordError(ErrorCode::kMalformedRecord, 1,
                      "CSV header must name id, age_years, age_months, text");
  }
  std::vector<std::string> fields;
  while (true) {
    const std::size_t record_line = line;
    if (!ReadCsvRecord(in, fields, line)) break;
    if (fields.size() == 1 && TrimWhitespace(fields[0]).empty()) continue;
    if (fields.size() != header.size()) {
      throw RecordError(ErrorCode::kMalformedRecord, record_line,
                        "expected " + std::to_string(header.size()) + " fields, got " +
                            std::to_string(fields.size()));
    }
    TriageNote note;
    note.id = fields[*id_col];
    note.age_years = ParseIntField(fields[*years_col], "age_years", record_line);
    note.age_months = ParseIntField(fields[*months_col], "age_months", record_line);
    note.text = fields[*text_col];
    if (gold_col && !TrimWhitespace(fields[*gold_col]).empty()) {
      note.gold = ParseGold(std::string(TrimWhitespace(fields[*gold_col])), lexicon, record_line);
    }
    try {
      ValidateNote(note);
    } catch (const Error& e) {
      throw RecordError(e.code(), record_line, e.what());
    }
    dataset.notes.push_back(std::move(note));
  }
  return dataset;
}

// Unbiased draw in [0, bound) from a 64-bit engine; spelled out so streams
// are identical across standard library implementations.
std::uint64_t DrawBelow(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return x % bound;
}

}  // namespace

void ValidateNote(const TriageNote& note) {
  if (note.id.empty()) throw Error(ErrorCode::kMalformedRecord, "note id is empty");
  if (TrimWhitespace(note.text).empty()) {
    throw Error(ErrorCode::kMalformedRecord, "note '" + note.id + "' has empty text");
  }
  if (note.age_years < 0 || note.age_months < 0 || note.age_months > 11) {
    throw Error(ErrorCode::kAgeOutOfRange, "note '" + note.id + "' has an invalid age");
  }
}

ClassCounts Dataset::class_counts() const {
  ClassCounts counts;
  for (const auto& note : notes) {
    if (!note.gold) {
      ++counts.unlabeled;
    } else if (note.gold->variant() == VaccineLabel::Variant::kNo) {
      ++counts.absent;
    } else {
      ++counts.present;
    }
  }
  return counts;
}

bool Dataset::fully_labeled() const {
  return std::all_of(notes.begin(), notes.end(), [](const TriageNote& n) { return n.gold.has_value(); });
}

Dataset LoadNotes(std::istream& in, NoteFormat format, std::string name, const Lexicon* lexicon) {
  Dataset dataset = format == NoteFormat::kJsonl ? LoadJsonl(in, lexicon) : LoadCsv(in, lexicon);
  dataset.name = std::move(name);
  std::set<std::string> seen;
  for (std::size_t i = 0; i < dataset.notes.size(); ++i) {
    if (!seen.insert(dataset.notes[i].id).second) {
      throw Error(ErrorCode::kDuplicateId, "duplicate note id '" + dataset.notes[i].id + "'");
    }
  }
  return dataset;
}

Dataset LoadNotesFile(const std::string& path, const Lexicon* lexicon) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  const bool csv = path.size() >= 4 && ToLowerAscii(path.substr(path.size() - 4)) == ".csv";
  std::string name = path.substr(path.find_last_of('/') == std::string::npos
                                     ? 0
                                     : path.find_last_of('/') + 1);
  return LoadNotes(in, csv ? NoteFormat::kCsv : NoteFormat::kJsonl, std::move(name), lexicon);
}

std::string NoteToJsonLine(const TriageNote& note) { return NoteToJson(note).dump(); }

TriageNote NoteFromJson(const json& j) {
  TriageNote note = RecordFromJson(j, nullptr, 0);
  ValidateNote(note);
  return note;
}

ordered_json NoteToJson(const TriageNote& note) {
  ordered_json j;
  j["id"] = note.id;
  j["age_years"] = note.age_years;
  j["age_months"] = note.age_months;
  j["text"] = note.text;
  if (note.gold) j["gold"] = note.gold->label_string();
  return j;
}

void WriteNotesJsonl(std::ostream& out, const Dataset& dataset) {
  for (const auto& note : dataset.notes) out << NoteToJsonLine(note) << '\n';
}

ParsedAge ParseAgePrefix(std::string_view raw) {
  static const std::regex kPrefix(
      R"(^\s*age\s*:\s*(?:(\d+)\s*y\s*)?(?:(\d+)\s*m\b)?\s*\.?)", std::regex::icase);
  const std::string s(raw);
  std::smatch m;
  if (!std::regex_search(s, m, kPrefix) || (!m[1].matched && !m[2].matched)) {
    throw Error(ErrorCode::kMissingAgePrefix, "no age prefix in '" + s.substr(0, 40) + "'");
  }
  ParsedAge age;
  const int years = m[1].matched ? std::stoi(m[1].str()) : 0;
  const int months = m[2].matched ? std::stoi(m[2].str()) : 0;
  if (m[1].matched && months >= 12) {
    throw Error(ErrorCode::kAgeOutOfRange, "age months " + std::to_string(months) + " >= 12");
  }
  age.years = years + months / 12;
  age.months = months % 12;
  age.remainder = std::string(TrimWhitespace(std::string_view(s).substr(m.length(0))));
  return age;
}

std::string FormatAgePrefix(const TriageNote& note) {
  return "Age: " + std::to_string(note.age_years) + "Y " + std::to_string(note.age_months) + "M.";
}

TemplateSet LoadTemplates(std::istream& in) {
  json root;
  try {
    root = json::parse(in);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("template file: ") + e.what());
  }
  TemplateSet set;
  set.version = root.value("version", std::string());
  const json slots = root.value("slots", json::object());
  for (const auto& [slot, values] : slots.items()) {
    auto& out = set.slots[slot];
    for (const auto& v : values) {
      if (v.is_string()) {
        out.push_back({v.get<std::string>(), {}});
      } else {
        out.push_back({v.at("surface").get<std::string>(), v.value("canonical", std::string())});
      }
    }
  }
  const json templates = root.value("templates", json::array());
  for (const auto& t : templates) {
    NoteTemplate nt;
    nt.text = t.at("text").get<std::string>();
    nt.gold = t.at("gold").get<std::string>();
    if (auto it = t.find("age_months"); it != t.end()) {
      nt.min_age_months = it->at(0).get<int>();
      nt.max_age_months = it->at(1).get<int>();
    }
    set.templates.push_back(std::move(nt));
  }
  return set;
}

TemplateSet LoadTemplatesFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  return LoadTemplates(in);
}

Dataset GenerateSynthetic(std::uint64_t seed, std::size_t n, double vaccine_fraction,
                          const TemplateSet& templates) {
  if (templates.templates.empty()) throw Error(ErrorCode::kEmptyTemplates, "template set is empty");
  if (n == 0) throw Error(ErrorCode::kInvalidArgument, "n must be at least 1");
  if (!(vaccine_fraction >= 0.0 && vaccine_fraction <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "vaccine_fraction must lie in [0, 1]");
  }

  std::vector<const NoteTemplate*> present;
  std::vector<const NoteTemplate*> absent;
  for (const auto& t : templates.templates) {
    if (t.min_age_months < 0 || t.max_age_months < t.min_age_months) {
      throw Error(ErrorCode::kInvalidArgument, "template '" + t.text + "' has an empty age range");
    }
    (t.gold == "No" ? absent : present).push_back(&t);
  }
  const auto n_present = static_cast<std::size_t>(
      std::floor(static_cast<double>(n) * vaccine_fraction + 0.5 + 1e-9));
  if ((n_present > 0 && present.empty()) || (n_present < n && absent.empty())) {
    throw Error(ErrorCode::kEmptyTemplates, "template set lacks a class the fraction requires");
  }

  std::mt19937_64 rng(seed);
  std::vector<bool> is_present(n, false);
  std::fill(is_present.begin(), is_present.begin() + static_cast<std::ptrdiff_t>(n_present), true);
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(DrawBelow(rng, i));
    const bool tmp = is_present[i - 1];
    is_present[i - 1] = is_present[j];
    is_present[j] = tmp;
  }

  static const std::regex kSlot(R"(\{([a-z_]+)\})");
  Dataset dataset;
  dataset.name = "synthetic-seed" + std::to_string(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& pool = is_present[i] ? present : absent;
    const NoteTemplate& tmpl = *pool[DrawBelow(rng, pool.size())];

    std::map<std::string, const SlotValue*> drawn;
    std::string text;
    auto cursor = tmpl.text.cbegin();
    for (std::sregex_iterator it(tmpl.text.begin(), tmpl.text.end(), kSlot), end; it != end; ++it) {
      const std::string slot = (*it)[1].str();
      auto values = templates.slots.find(slot);
      if (values == templates.slots.end() || values->second.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "template uses unknown slot '" + slot + "'");
      }
      const SlotValue& v = values->second[DrawBelow(rng, values->second.size())];
      drawn.emplace(slot, &v);
      text.append(cursor, (*it)[0].first);
      text += v.surface;
      cursor = (*it)[0].second;
    }
    text.append(cursor, tmpl.text.cend());

    TriageNote note;
    char id[64];
    std::snprintf(id, sizeof(id), "syn-%llu-%04zu", static_cast<unsigned long long>(seed), i);
    note.id = id;
    const int span = tmpl.max_age_months - tmpl.min_age_months + 1;
    const int age = tmpl.min_age_months + static_cast<int>(DrawBelow(rng, static_cast<std::uint64_t>(span)));
    note.age_years = age / 12;
    note.age_months = age % 12;
    note.text = text;
    if (!tmpl.gold.empty() && tmpl.gold[0] == '$') {
      auto v = drawn.find(tmpl.gold.substr(1));
      if (v == drawn.end() || v->second->canonical.empty()) {
        throw Error(ErrorCode::kInvalidArgument,
                    "template gold '" + tmpl.gold + "' does not name a drawn vaccine slot");
      }
      note.gold = VaccineLabel::Named(v->second->canonical);
    } else {
      note.gold = VaccineLabel::FromLabelString(tmpl.gold);
    }
    dataset.notes.push_back(std::move(note));
  }
  return dataset;
}

}  // namespace vaxtract
