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

#include "vaxtract/evaluator.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>
#include <unordered_map>

#include "vaxtract/error.hpp"
#include "vaxtract/text.hpp"

namespace vaxtract {
namespace {

using nlohmann::json;

struct AlignedPair {
  const Prediction* prediction;
  const GoldRecord* gold;
};

// Gold order; every gold id needs exactly one prediction and vice versa.
std::vector<AlignedPair> Align(const std::vector<Prediction>& predictions,
                               const std::vector<GoldRecord>& golds) {
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions) {
    if (!by_id.emplace(p.id, &p).second) {
      throw Error(ErrorCode::kIdMismatch, "duplicate prediction id '" + p.id + "'");
    }
  }
  std::vector<AlignedPair> pairs;
  pairs.reserve(golds.size());
  for (const auto& g : golds) {
    auto it = by_id.find(g.id);
    if (it == by_id.end()) throw Error(ErrorCode::kIdMismatch, "no prediction for note '" + g.id + "'");
    pairs.push_back({it->second, &g});
  }
  if (pairs.size() != predictions.size()) {
    std::unordered_map<std::string, bool> gold_ids;
    for (const auto& g : golds) gold_ids.emplace(g.id, true);
    for (const auto& p : predictions) {
      if (gold_ids.count(p.id) == 0) {
        throw Error(ErrorCode::kIdMismatch, "prediction for unknown note '" + p.id + "'");
      }
    }
    throw Error(ErrorCode::kIdMismatch, "duplicate gold ids");
  }
  return pairs;
}

std::string Presence(bool predicted, bool gold) {
  if (predicted && gold) return "TP";
  if (!predicted && !gold) return "TN";
  return predicted ? "FP" : "FN";
}

json TallyJson(const Tally& t) {
  return {{"correct", t.correct}, {"total", t.total}, {"ratio", t.ratio()}};
}

Tally TallyFrom(const json& j) { return {j.at("correct").get<std::size_t>(), j.at("total").get<std::size_t>()}; }

}  // namespace

Prediction Prediction::From(const ExtractionResult& r) {
  return {r.note_id, r.label, r.exact_match_surface};
}

std::vector<GoldRecord> GoldFromDataset(const Dataset& dataset) {
  std::vector<GoldRecord> golds;
  golds.reserve(dataset.notes.size());
  for (const auto& note : dataset.notes) {
    if (!note.gold) throw Error(ErrorCode::kUnknownLabel, "note '" + note.id + "' has no gold label");
    golds.push_back({note.id, *note.gold});
  }
  return golds;
}

bool Binarize(const VaccineLabel& label) {
  return label.variant() != VaccineLabel::Variant::kNo;
}

ConfusionCounts Confusion(const std::vector<Prediction>& predictions,
                          const std::vector<GoldRecord>& golds) {
  ConfusionCounts counts;
  for (const auto& [p, g] : Align(predictions, golds)) {
    const bool pred = Binarize(p->label);
    const bool gold = Binarize(g->gold);
    if (pred && gold) {
      ++counts.tp;
    } else if (!pred && !gold) {
      ++counts.tn;
    } else if (pred) {
      ++counts.fp;
    } else {
      ++counts.fn;
    }
  }
  return counts;
}

Metrics ComputeMetrics(const ConfusionCounts& c) {
  Metrics m;
  if (c.tp + c.fp > 0) {
    m.precision = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp);
  } else {
    m.precision_undefined = true;
  }
  if (c.tp + c.fn > 0) {
    m.recall = static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn);
  } else {
    m.recall_undefined = true;
  }
  if (m.precision + m.recall > 0.0) {
    m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
  } else {
    m.f1_undefined = true;
  }
  return m;
}

bool NameCorrect(const VaccineLabel& predicted, const VaccineLabel& gold, const Lexicon& lexicon) {
  if (predicted.variant() != gold.variant()) return false;
  if (!gold.is_named()) return true;
  return lexicon.equivalent(predicted.canonical_id(), gold.canonical_id()) ||
         lexicon.equivalent(predicted.surface(), gold.canonical_id());
}

NameAccuracy ComputeNameAccuracy(const std::vector<Prediction>& predictions,
                                 const std::vector<GoldRecord>& golds, const Lexicon& lexicon) {
  NameAccuracy acc;
  for (const auto& [p, g] : Align(predictions, golds)) {
    const bool correct = NameCorrect(p->label, g->gold, lexicon);
    ++acc.overall.total;
    acc.overall.correct += correct ? 1 : 0;
    if (g->gold.variant() == VaccineLabel::Variant::kUnspecified) {
      ++acc.unspecified.total;
      acc.unspecified.correct += correct ? 1 : 0;
    }
  }
  return acc;
}

bool ExactMatch(const Prediction& prediction, const GoldRecord& gold) {
  return prediction.raw.has_value() &&
         TrimWhitespace(*prediction.raw) == TrimWhitespace(gold.gold.label_string());
}

Tally ExactMatchRate(const std::vector<Prediction>& predictions,
                     const std::vector<GoldRecord>& golds) {
  if (golds.empty()) throw Error(ErrorCode::kEmptyInput, "exact-match rate of an empty set");
  Tally t;
  for (const auto& [p, g] : Align(predictions, golds)) {
    ++t.total;
    t.correct += ExactMatch(*p, *g) ? 1 : 0;
  }
  return t;
}

std::int64_t RoundHalfUpScaled(double x, int digits) {
  const double scale = std::pow(10.0, digits);
  // The nudge keeps exact halves that binary floating point stores a hair
  // low (0.945 * 1000) rounding up.
  return static_cast<std::int64_t>(std::floor(x * scale + 0.5 + 1e-9));
}

std::string FormatMetric(double x) {
  const std::int64_t thousandths = RoundHalfUpScaled(x, 3);
  const std::int64_t hundredths = (thousandths + 5) / 10;
  std::ostringstream out;
  out << hundredths / 100 << '.' << std::setw(2) << std::setfill('0') << hundredths % 100;
  return out.str();
}

std::string FormatPercent(std::size_t correct, std::size_t total, int decimals) {
  if (total == 0) return "n/a";
  std::uint64_t scale = 100;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  // round(correct * scale / total) half up, in exact integer arithmetic.
  const std::uint64_t units = (2 * correct * scale + total) / (2 * total);
  std::uint64_t divisor = 1;
  for (int i = 0; i < decimals; ++i) divisor *= 10;
  std::ostringstream out;
  out << units / divisor;
  if (decimals > 0) {
    out << '.' << std::setw(decimals) << std::setfill('0') << units % divisor;
  }
  out << '%';
  return out.str();
}

EvalReport Report(const std::vector<Prediction>& predictions,
                  const std::vector<GoldRecord>& golds, const Lexicon& lexicon) {
  if (predictions.empty() || golds.empty()) {
    throw Error(ErrorCode::kEmptyInput, "cannot score an empty prediction set");
  }
  EvalReport report;
  report.counts = Confusion(predictions, golds);
  report.metrics = ComputeMetrics(report.counts);
  const NameAccuracy acc = ComputeNameAccuracy(predictions, golds, lexicon);
  report.name_correct_all = acc.overall;
  report.name_correct_unspecified = acc.unspecified;
  report.exact_match = ExactMatchRate(predictions, golds);
  report.lexicon_version = lexicon.version();
  report.lexicon_hash = lexicon.content_hash();
  for (const auto& [p, g] : Align(predictions, golds)) {
    report.per_note.push_back({g->id, g->gold, p->label,
                               Presence(Binarize(p->label), Binarize(g->gold)),
                               NameCorrect(p->label, g->gold, lexicon), ExactMatch(*p, *g)});
  }
  return report;
}

void to_json(json& j, const EvalReport& r) {
  j = json{
      {"schema_version", r.schema_version},
      {"counts", {{"tp", r.counts.tp}, {"tn", r.counts.tn}, {"fp", r.counts.fp}, {"fn", r.counts.fn}}},
      {"metrics",
       {{"precision", r.metrics.precision},
        {"recall", r.metrics.recall},
        {"f1", r.metrics.f1},
        {"precision_undefined", r.metrics.precision_undefined},
        {"recall_undefined", r.metrics.recall_undefined},
        {"f1_undefined", r.metrics.f1_undefined},
        {"display", {{"precision", FormatMetric(r.metrics.precision)},
                     {"recall", FormatMetric(r.metrics.recall)},
                     {"f1", FormatMetric(r.metrics.f1)}}}}},
      {"name_correct_all", TallyJson(r.name_correct_all)},
      {"name_correct_unspecified", TallyJson(r.name_correct_unspecified)},
      {"exact_match", TallyJson(r.exact_match)},
      {"lexicon_version", r.lexicon_version},
      {"lexicon_hash", r.lexicon_hash},
  };
  json notes = json::array();
  for (const auto& n : r.per_note) {
    notes.push_back({{"id", n.id},
                     {"gold", n.gold},
                     {"predicted", n.predicted},
                     {"presence", n.presence},
                     {"name_correct", n.name_correct},
                     {"exact", n.exact}});
  }
  j["per_note"] = std::move(notes);
}

void from_json(const json& j, EvalReport& r) {
  r = EvalReport{};
  r.schema_version = j.at("schema_version").get<int>();
  if (r.schema_version != EvalReport::kSchemaVersion) {
    throw Error(ErrorCode::kInvalidArgument,
                "unsupported report schema_version " + std::to_string(r.schema_version));
  }
  const auto& c = j.at("counts");
  r.counts = {c.at("tp").get<std::size_t>(), c.at("tn").get<std::size_t>(),
              c.at("fp").get<std::size_t>(), c.at("fn").get<std::size_t>()};
  const auto& m = j.at("metrics");
  r.metrics.precision = m.at("precision").get<double>();
  r.metrics.recall = m.at("recall").get<double>();
  r.metrics.f1 = m.at("f1").get<double>();
  r.metrics.precision_undefined = m.value("precision_undefined", false);
  r.metrics.recall_undefined = m.value("recall_undefined", false);
  r.metrics.f1_undefined = m.value("f1_undefined", false);
  r.name_correct_all = TallyFrom(j.at("name_correct_all"));
  r.name_correct_unspecified = TallyFrom(j.at("name_correct_unspecified"));
  r.exact_match = TallyFrom(j.at("exact_match"));
  r.lexicon_version = j.value("lexicon_version", std::string());
  r.lexicon_hash = j.value("lexicon_hash", std::string());
  for (const auto& n : j.at("per_note")) {
    r.per_note.push_back({n.at("id").get<std::string>(), n.at("gold").get<VaccineLabel>(),
                          n.at("predicted").get<VaccineLabel>(), n.at("presence").get<std::string>(),
                          n.at("name_correct").get<bool>(), n.at("exact").get<bool>()});
  }
}

std::string RenderReportTable(const EvalReport& r, const std::string& model_name) {
  const std::string name = model_name.empty() ? "model" : model_name;
  const int width = std::max<int>(12, static_cast<int>(name.size()) + 2);
  std::ostringstream out;
  out << std::left << std::setw(width) << "Model" << std::right << std::setw(6) << "TP"
      << std::setw(6) << "TN" << std::setw(6) << "FN" << std::setw(6) << "FP" << std::setw(11)
      << "Precision" << std::setw(8) << "Recall" << std::setw(6) << "F1" << '\n';
  out << std::left << std::setw(width) << name << std::right << std::setw(6) << r.counts.tp
      << std::setw(6) << r.counts.tn << std::setw(6) << r.counts.fn << std::setw(6) << r.counts.fp
      << std::setw(11) << FormatMetric(r.metrics.precision) << std::setw(8)
      << FormatMetric(r.metrics.recall) << std::setw(6) << FormatMetric(r.metrics.f1) << '\n';
  out << '\n';

  const std::string unspec_head = "Unspecified (" + std::to_string(r.name_correct_unspecified.total) + ")";
  const std::string all_head = "All (" + std::to_string(r.name_correct_all.total) + ")";
  out << std::left << std::setw(width) << "Label" << std::setw(30) << unspec_head << all_head << '\n';
  out << std::left << std::setw(width) << "Response" << std::right << std::setw(8) << "Correct"
      << std::setw(10) << "Incorrect" << std::setw(12) << "% Correct" << std::setw(8) << "Correct"
      << std::setw(10) << "Incorrect" << std::setw(12) << "% Correct" << '\n';
  const auto& u = r.name_correct_unspecified;
  const auto& a = r.name_correct_all;
  out << std::left << std::setw(width) << name << std::right << std::setw(8) << u.correct
      << std::setw(10) << (u.total - u.correct) << std::setw(12) << FormatPercent(u.correct, u.total, 0)
      << std::setw(8) << a.correct << std::setw(10) << (a.total - a.correct) << std::setw(12)
      << FormatPercent(a.correct, a.total, 1) << '\n';
  out << '\n'
      << "Exact match: " << FormatPercent(r.exact_match.correct, r.exact_match.total, 1) << " ("
      << r.exact_match.correct << "/" << r.exact_match.total << ")\n";
  return out.str();
}

}  // namespace vaxtract
