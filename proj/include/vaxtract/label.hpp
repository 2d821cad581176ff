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

#ifndef VAXTRACT_LABEL_HPP_
#define VAXTRACT_LABEL_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

#include "json.hpp"

namespace vaxtract {

// The three-way extraction outcome. Named labels carry the canonical vaccine
// id and the surface form it was read from; No and Unspecified carry nothing.
class VaccineLabel {
 public:
  enum class Variant { kNo, kUnspecified, kNamed };

  VaccineLabel() = default;

  static VaccineLabel No() { return VaccineLabel(); }
  static VaccineLabel Unspecified();
  // Throws kInvalidArgument when canonical_id is empty. An empty surface
  // defaults to the canonical id.
  static VaccineLabel Named(std::string canonical_id, std::string surface = {});

  // Decodes the file encoding: "No", "Unspecified", otherwise a canonical id.
  // Throws kUnknownLabel on an empty string.
  static VaccineLabel FromLabelString(std::string_view s);

  Variant variant() const { return variant_; }
  bool is_named() const { return variant_ == Variant::kNamed; }
  const std::string& canonical_id() const { return canonical_id_; }
  const std::string& surface() const { return surface_; }

  // "No", "Unspecified" or the canonical id.
  std::string label_string() const;

  // Same variant and canonical id; the surface is provenance only.
  bool same_identity(const VaccineLabel& other) const {
    return variant_ == other.variant_ && canonical_id_ == other.canonical_id_;
  }

  friend bool operator==(const VaccineLabel&, const VaccineLabel&) = default;

 private:
  Variant variant_ = Variant::kNo;
  std::string canonical_id_;
  std::string surface_;
};

std::string_view to_string(VaccineLabel::Variant v);

enum class Engine { kRules, kLlm };

std::string_view to_string(Engine e);
// Throws kInvalidArgument for anything but "rules" / "llm".
Engine ParseEngine(std::string_view s);

// Half-open byte range into a note's text.
struct Span {
  std::size_t begin = 0;
  std::size_t end = 0;
  friend bool operator==(const Span&, const Span&) = default;
};

struct ExtractionResult {
  std::string note_id;
  VaccineLabel label;
  Engine engine = Engine::kRules;
  std::optional<Span> matched_span;
  // Assistant text exactly as returned by the model (llm only).
  std::optional<std::string> raw_response;
  // The label string before normalization; scored for the exact-match rate.
  std::optional<std::string> exact_match_surface;
  // Set when a gold label string was available at normalization time.
  std::optional<bool> exact_match;
  bool unknown_surface = false;
  bool parse_failed = false;
  // Per-note failure (transport, timeout, ...); the label is then No.
  std::optional<std::string> error;

  friend bool operator==(const ExtractionResult&,
                         const ExtractionResult&) = default;
};

void to_json(nlohmann::json& j, const VaccineLabel& label);
// Accepts either the object form or a bare label string.
void from_json(const nlohmann::json& j, VaccineLabel& label);
void to_json(nlohmann::json& j, const ExtractionResult& r);
void from_json(const nlohmann::json& j, ExtractionResult& r);

}  // namespace vaxtract

#endif  // VAXTRACT_LABEL_HPP_
