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

#include "vaxtract/label.hpp"

#include "vaxtract/error.hpp"

namespace vaxtract {

using nlohmann::json;

VaccineLabel VaccineLabel::Unspecified() {
  VaccineLabel l;
  l.variant_ = Variant::kUnspecified;
  return l;
}

VaccineLabel VaccineLabel::Named(std::string canonical_id, std::string surface) {
  if (canonical_id.empty()) {
    throw Error(ErrorCode::kInvalidArgument,
                "named label requires a canonical id");
  }
  VaccineLabel l;
  l.variant_ = Variant::kNamed;
  if (surface.empty()) surface = canonical_id;
  l.canonical_id_ = std::move(canonical_id);
  l.surface_ = std::move(surface);
  return l;
}

VaccineLabel VaccineLabel::FromLabelString(std::string_view s) {
  if (s.empty()) throw Error(ErrorCode::kUnknownLabel, "empty label string");
  if (s == "No") return No();
  if (s == "Unspecified") return Unspecified();
  return Named(std::string(s));
}

std::string VaccineLabel::label_string() const {
  switch (variant_) {
    case Variant::kNo: return "No";
    case Variant::kUnspecified: return "Unspecified";
    case Variant::kNamed: return canonical_id_;
  }
  return "No";
}

std::string_view to_string(VaccineLabel::Variant v) {
  switch (v) {
    case VaccineLabel::Variant::kNo: return "No";
    case VaccineLabel::Variant::kUnspecified: return "Unspecified";
    case VaccineLabel::Variant::kNamed: return "Named";
  }
  return "No";
}

std::string_view to_string(Engine e) {
  return e == Engine::kLlm ? "llm" : "rules";
}

Engine ParseEngine(std::string_view s) {
  if (s == "rules") return Engine::kRules;
  if (s == "llm") return Engine::kLlm;
  throw Error(ErrorCode::kInvalidArgument,
              "unknown engine '" + std::string(s) + "' (expected rules|llm)");
}

void to_json(json& j, const VaccineLabel& label) {
  j = json{{"variant", to_string(label.variant())}};
  if (label.is_named()) {
    j["canonical_id"] = label.canonical_id();
    j["surface"] = label.surface();
  }
}

void from_json(const json& j, VaccineLabel& label) {
  if (j.is_string()) {
    label = VaccineLabel::FromLabelString(j.get<std::string>());
    return;
  }
  if (!j.is_object() || !j.contains("variant")) {
    throw Error(ErrorCode::kUnknownLabel, "label must be a string or object");
  }
  const auto variant = j.at("variant").get<std::string>();
  if (variant == "No") {
    label = VaccineLabel::No();
  } else if (variant == "Unspecified") {
    label = VaccineLabel::Unspecified();
  } else if (variant == "Named") {
    label = VaccineLabel::Named(j.value("canonical_id", std::string()),
                                j.value("surface", std::string()));
  } else {
    throw Error(ErrorCode::kUnknownLabel, "unknown label variant '" + variant + "'");
  }
}

void to_json(json& j, const ExtractionResult& r) {
  j = json{{"id", r.note_id},
           {"engine", to_string(r.engine)},
           {"label", r.label},
           {"unknown_surface", r.unknown_surface},
           {"parse_failed", r.parse_failed}};
  if (r.matched_span) {
    j["matched_span"] = json::array({r.matched_span->begin, r.matched_span->end});
  }
  if (r.raw_response) j["raw_response"] = *r.raw_response;
  if (r.exact_match_surface) j["exact_match_surface"] = *r.exact_match_surface;
  if (r.exact_match) j["exact_match"] = *r.exact_match;
  if (r.error) j["error"] = *r.error;
}

void from_json(const json& j, ExtractionResult& r) {
  r = ExtractionResult{};
  r.note_id = j.at("id").get<std::string>();
  r.label = j.at("label").get<VaccineLabel>();
  r.engine = ParseEngine(j.value("engine", std::string("rules")));
  r.unknown_surface = j.value("unknown_surface", false);
  r.parse_failed = j.value("parse_failed", false);
  if (auto it = j.find("matched_span"); it != j.end() && it->is_array()) {
    r.matched_span = Span{it->at(0).get<std::size_t>(), it->at(1).get<std::size_t>()};
  }
  if (auto it = j.find("raw_response"); it != j.end() && it->is_string()) {
    r.raw_response = it->get<std::string>();
  }
  if (auto it = j.find("exact_match_surface"); it != j.end() && it->is_string()) {
    r.exact_match_surface = it->get<std::string>();
  }
  if (auto it = j.find("exact_match"); it != j.end() && it->is_boolean()) {
    r.exact_match = it->get<bool>();
  }
  if (auto it = j.find("error"); it != j.end() && it->is_string()) {
    r.error = it->get<std::string>();
  }
}

}  // namespace vaxtract
