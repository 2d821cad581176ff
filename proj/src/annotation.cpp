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

#include "vaxtract/annotation.hpp"

#include <algorithm>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <mutex>

#include "vaxtract/error.hpp"
#include "vaxtract/llm_extractor.hpp"

namespace vaxtract {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

json ProposalJson(const Proposal& p) {
  json j = {{"label", p.label}, {"engine", to_string(p.engine)}};
  if (p.matched_span) j["matched_span"] = json::array({p.matched_span->begin, p.matched_span->end});
  return j;
}

Proposal ProposalFrom(const json& j) {
  Proposal p;
  p.label = j.at("label").get<VaccineLabel>();
  p.engine = ParseEngine(j.at("engine").get<std::string>());
  if (auto it = j.find("matched_span"); it != j.end() && it->is_array()) {
    p.matched_span = Span{it->at(0).get<std::size_t>(), it->at(1).get<std::size_t>()};
  }
  return p;
}

RecordStatus ParseStatus(const std::string& s) {
  if (s == "pending") return RecordStatus::kPending;
  if (s == "accepted") return RecordStatus::kAccepted;
  if (s == "corrected") return RecordStatus::kCorrected;
  if (s == "skipped") return RecordStatus::kSkipped;
  throw Error(ErrorCode::kInvalidArgument, "unknown record status '" + s + "'");
}

// Stable routing for second opinions: the first 32 bits of SHA-256(id).
bool RoutedForDualReview(const std::string& id, double fraction) {
  if (fraction <= 0.0) return false;
  if (fraction >= 1.0) return true;
  const std::uint32_t bits = static_cast<std::uint32_t>(std::stoul(Sha256Hex(id).substr(0, 8), nullptr, 16));
  return static_cast<double>(bits) / 4294967296.0 < fraction;
}

void WriteFileAtomically(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::kIo, "cannot write '" + tmp + "'");
    out << content;
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "short write to '" + tmp + "'");
  }
  std::filesystem::rename(tmp, path);
}

json StateJson(const StoreState& state) {
  json records = json::array();
  for (const auto& id : state.order) records.push_back(state.records.at(id));
  return {{"last_seq", state.last_seq}, {"records", std::move(records)}};
}

StoreState StateFrom(const json& j) {
  StoreState state;
  state.last_seq = j.at("last_seq").get<std::uint64_t>();
  for (const auto& r : j.at("records")) {
    auto record = r.get<AnnotationRecord>();
    state.order.push_back(record.note.id);
    state.records.emplace(record.note.id, std::move(record));
  }
  return state;
}

}  // namespace

Clock SystemClock() {
  return [] {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
  };
}

std::string FormatTimestamp(TimestampMs ts) {
  const std::time_t secs = static_cast<std::time_t>(ts >= 0 ? ts / 1000 : (ts - 999) / 1000);
  const int ms = static_cast<int>(ts - static_cast<TimestampMs>(secs) * 1000);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  char buf[40];
  const std::size_t n = std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%S", &tm);
  std::snprintf(buf + n, sizeof(buf) - n, ".%03dZ", ms);
  return buf;
}

TimestampMs ParseTimestamp(const std::string& iso) {
  std::tm tm{};
  int ms = 0;
  if (std::sscanf(iso.c_str(), "%d-%d-%dT%d:%d:%d.%dZ", &tm.tm_year, &tm.tm_mon, &tm.tm_mday,
                  &tm.tm_hour, &tm.tm_min, &tm.tm_sec, &ms) != 7) {
    throw Error(ErrorCode::kInvalidArgument, "bad timestamp '" + iso + "'");
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  return static_cast<TimestampMs>(timegm(&tm)) * 1000 + ms;
}

std::string_view to_string(RecordStatus status) {
  switch (status) {
    case RecordStatus::kPending: return "pending";
    case RecordStatus::kAccepted: return "accepted";
    case RecordStatus::kCorrected: return "corrected";
    case RecordStatus::kSkipped: return "skipped";
  }
  return "pending";
}

void to_json(json& j, const AnnotationRecord& r) {
  j = json{{"id", r.note.id},
           {"note", NoteToJson(r.note)},
           {"age_display", FormatAgePrefix(r.note)},
           {"status", to_string(r.status)},
           {"reviewer", r.reviewer},
           {"dual_review", r.dual_review},
           {"enqueued_seq", r.enqueued_seq},
           {"queue_seq", r.queue_seq}};
  j["proposed"] = r.proposed ? ProposalJson(*r.proposed) : json(nullptr);
  j["final"] = r.final_label ? json(*r.final_label) : json(nullptr);
  j["decided_at"] = r.decided_at ? json(FormatTimestamp(*r.decided_at)) : json(nullptr);
  if (r.second_opinion) {
    j["second_opinion"] = {{"reviewer", r.second_opinion->reviewer},
                           {"label", r.second_opinion->label},
                           {"decided_at", FormatTimestamp(r.second_opinion->decided_at)}};
  } else {
    j["second_opinion"] = nullptr;
  }
  if (r.lease) {
    j["lease"] = {{"reviewer", r.lease->reviewer}, {"expires_at", FormatTimestamp(r.lease->expires_at)}};
  } else {
    j["lease"] = nullptr;
  }
}

void from_json(const json& j, AnnotationRecord& r) {
  r = AnnotationRecord{};
  r.note = NoteFromJson(j.at("note"));
  if (const auto& p = j.at("proposed"); !p.is_null()) r.proposed = ProposalFrom(p);
  r.status = ParseStatus(j.at("status").get<std::string>());
  if (const auto& f = j.at("final"); !f.is_null()) r.final_label = f.get<VaccineLabel>();
  r.reviewer = j.value("reviewer", std::string());
  if (const auto& d = j.at("decided_at"); !d.is_null()) r.decided_at = ParseTimestamp(d.get<std::string>());
  if (const auto& s = j.at("second_opinion"); !s.is_null()) {
    r.second_opinion = SecondOpinion{s.at("reviewer").get<std::string>(), s.at("label").get<VaccineLabel>(),
                                     ParseTimestamp(s.at("decided_at").get<std::string>())};
  }
  r.dual_review = j.value("dual_review", false);
  r.enqueued_seq = j.at("enqueued_seq").get<std::uint64_t>();
  r.queue_seq = j.at("queue_seq").get<std::uint64_t>();
  if (const auto& l = j.at("lease"); !l.is_null()) {
    r.lease = Lease{l.at("reviewer").get<std::string>(), ParseTimestamp(l.at("expires_at").get<std::string>())};
  }
}

std::string LogEventToJsonLine(const LogEvent& e) {
  ordered_json j;
  j["seq"] = e.seq;
  j["ts"] = FormatTimestamp(e.ts);
  j["record_id"] = e.record_id;
  j["reviewer"] = e.reviewer;
  j["action"] = e.action;
  if (e.label) j["label"] = json(*e.label);
  if (e.note) j["note"] = NoteToJson(*e.note);
  if (e.action == "enqueue") {
    j["proposal"] = e.proposal ? ProposalJson(*e.proposal) : json(nullptr);
    j["dual_review"] = e.dual_review;
  }
  if (e.lease_expires) j["lease_expires"] = FormatTimestamp(*e.lease_expires);
  return j.dump();
}

LogEvent LogEventFromJsonLine(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kMalformedRecord, std::string("log line is not JSON: ") + ex.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::kMalformedRecord, "log line is not an object");
  LogEvent e;
  e.seq = j.at("seq").get<std::uint64_t>();
  e.ts = ParseTimestamp(j.at("ts").get<std::string>());
  e.record_id = j.at("record_id").get<std::string>();
  e.reviewer = j.value("reviewer", std::string());
  e.action = j.at("action").get<std::string>();
  if (auto it = j.find("label"); it != j.end() && !it->is_null()) e.label = it->get<VaccineLabel>();
  if (auto it = j.find("note"); it != j.end() && !it->is_null()) e.note = NoteFromJson(*it);
  if (auto it = j.find("proposal"); it != j.end() && !it->is_null()) e.proposal = ProposalFrom(*it);
  e.dual_review = j.value("dual_review", false);
  if (auto it = j.find("lease_expires"); it != j.end() && !it->is_null()) {
    e.lease_expires = ParseTimestamp(it->get<std::string>());
  }
  return e;
}

std::vector<LogEvent> ReadLog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open log '" + path + "'");
  std::vector<LogEvent> events;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      events.push_back(LogEventFromJsonLine(line));
    } catch (const std::exception& e) {
      Error err(ErrorCode::kMalformedRecord, "log line " + std::to_string(n) + ": " + e.what());
      err.line = n;
      throw err;
    }
  }
  return events;
}

AnnotationStore::AnnotationStore(StoreOptions options) : options_(std::move(options)) {
  if (!options_.clock) options_.clock = SystemClock();
  load();
}

AnnotationStore::AnnotationStore(AnnotationStore&& other) noexcept
    : options_(std::move(other.options_)),
      state_(std::move(other.state_)),
      events_(std::move(other.events_)),
      log_(std::move(other.log_)) {}

AnnotationStore AnnotationStore::Replay(const std::vector<LogEvent>& events, StoreOptions options) {
  options.log_path.clear();
  AnnotationStore store(std::move(options));
  for (const auto& e : events) {
    store.events_.push_back(e);
    store.apply(e);
  }
  return store;
}

void AnnotationStore::load() {
  if (options_.log_path.empty()) return;
  const std::string snap = snapshot_path();
  if (std::filesystem::exists(snap)) {
    std::ifstream in(snap);
    state_ = StateFrom(json::parse(in));
  }
  if (std::filesystem::exists(options_.log_path)) {
    events_ = ReadLog(options_.log_path);
    std::uint64_t prev = 0;
    for (const auto& e : events_) {
      if (e.seq <= prev) throw Error(ErrorCode::kMalformedRecord, "log sequence is not increasing");
      prev = e.seq;
      if (e.seq > state_.last_seq) apply(e);
    }
    if (prev < state_.last_seq) {
      throw Error(ErrorCode::kMalformedRecord, "snapshot is ahead of the decision log");
    }
  }
  log_.open(options_.log_path, std::ios::app | std::ios::binary);
  if (!log_) throw Error(ErrorCode::kIo, "cannot open decision log '" + options_.log_path + "'");
}

std::string AnnotationStore::snapshot_path() const {
  return options_.log_path.empty() ? std::string() : options_.log_path + ".snapshot.json";
}

void AnnotationStore::snapshot() const {
  if (options_.log_path.empty()) return;
  std::shared_lock lock(mu_);
  WriteFileAtomically(snapshot_path(), StateJson(state_).dump());
}

TimestampMs AnnotationStore::now() const { return options_.clock(); }

bool AnnotationStore::lease_active(const AnnotationRecord& r, TimestampMs at) const {
  return r.lease && r.lease->expires_at > at;
}

void AnnotationStore::commit(LogEvent event) {
  event.seq = state_.last_seq + 1;
  if (log_.is_open()) {
    log_ << LogEventToJsonLine(event) << '\n';
    log_.flush();
    if (!log_) throw Error(ErrorCode::kIo, "decision log write failed");
  }
  events_.push_back(event);
  apply(event);
  if (log_.is_open() && options_.snapshot_interval > 0 &&
      event.seq % options_.snapshot_interval == 0) {
    WriteFileAtomically(snapshot_path(), StateJson(state_).dump());
  }
}

void AnnotationStore::apply(const LogEvent& e) {
  state_.last_seq = e.seq;
  if (e.action == "enqueue") {
    AnnotationRecord r;
    r.note = *e.note;
    r.proposed = e.proposal;
    r.dual_review = e.dual_review;
    r.enqueued_seq = r.queue_seq = e.seq;
    state_.order.push_back(e.record_id);
    state_.records.insert_or_assign(e.record_id, std::move(r));
    return;
  }
  auto it = state_.records.find(e.record_id);
  if (it == state_.records.end()) {
    throw Error(ErrorCode::kUnknownRecord, "log event for unknown record '" + e.record_id + "'");
  }
  AnnotationRecord& r = it->second;
  if (e.action == "lease") {
    r.lease = Lease{e.reviewer, e.lease_expires.value_or(e.ts)};
    return;
  }
  r.lease.reset();
  if (e.action == "skip") {
    if (!r.decided()) {
      r.status = RecordStatus::kSkipped;
      r.queue_seq = e.seq;
    }
    return;
  }
  const VaccineLabel label = e.action == "accept" ? r.proposed->label : *e.label;
  if (r.decided()) {
    r.second_opinion = SecondOpinion{e.reviewer, label, e.ts};
    return;
  }
  r.status = e.action == "accept" ? RecordStatus::kAccepted : RecordStatus::kCorrected;
  r.final_label = label;
  r.reviewer = e.reviewer;
  r.decided_at = e.ts;
}

std::size_t AnnotationStore::prelabel(const Dataset& dataset, const BatchEngine& engine) {
  std::vector<TriageNote> fresh;
  {
    std::shared_lock lock(mu_);
    for (const auto& note : dataset.notes) {
      if (state_.records.count(note.id) == 0) fresh.push_back(note);
    }
  }
  if (fresh.empty()) return 0;
  const std::vector<ExtractionResult> results = engine(fresh);
  if (results.size() != fresh.size()) {
    throw Error(ErrorCode::kIdMismatch, "engine returned a different number of results");
  }

  std::unique_lock lock(mu_);
  std::size_t enqueued = 0;
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    if (state_.records.count(fresh[i].id) != 0) continue;
    LogEvent e;
    e.ts = now();
    e.record_id = fresh[i].id;
    e.action = "enqueue";
    e.note = fresh[i];
    if (!results[i].error && !results[i].parse_failed) {
      e.proposal = Proposal{results[i].label, results[i].engine, results[i].matched_span};
    }
    e.dual_review = RoutedForDualReview(fresh[i].id, options_.dual_review_fraction);
    commit(std::move(e));
    ++enqueued;
  }
  return enqueued;
}

std::optional<AnnotationRecord> AnnotationStore::next_pending(const std::string& reviewer) {
  if (reviewer.empty()) throw Error(ErrorCode::kInvalidArgument, "reviewer id is required");
  std::unique_lock lock(mu_);
  const TimestampMs at = now();

  auto awaiting_primary = [](const AnnotationRecord& r) { return !r.decided(); };
  auto awaiting_second = [&reviewer](const AnnotationRecord& r) {
    return r.decided() && r.dual_review && !r.second_opinion && r.reviewer != reviewer;
  };

  for (const auto& [id, r] : state_.records) {
    if (lease_active(r, at) && r.lease->reviewer == reviewer && (awaiting_primary(r) || awaiting_second(r))) {
      return r;
    }
  }

  const AnnotationRecord* pick = nullptr;
  for (int pass = 0; pass < 2 && pick == nullptr; ++pass) {
    for (const auto& [id, r] : state_.records) {
      if (lease_active(r, at)) continue;
      if (!(pass == 0 ? awaiting_primary(r) : awaiting_second(r))) continue;
      if (pick == nullptr || r.queue_seq < pick->queue_seq) pick = &r;
    }
  }
  if (pick == nullptr) return std::nullopt;

  LogEvent e;
  e.ts = at;
  e.record_id = pick->note.id;
  e.reviewer = reviewer;
  e.action = "lease";
  e.lease_expires = at + options_.lease_duration.count();
  const std::string id = pick->note.id;
  commit(std::move(e));
  return state_.records.at(id);
}

AnnotationRecord AnnotationStore::submit_decision(const std::string& record_id,
                                                  const std::string& reviewer,
                                                  const Decision& decision) {
  std::unique_lock lock(mu_);
  auto it = state_.records.find(record_id);
  if (it == state_.records.end()) {
    throw Error(ErrorCode::kUnknownRecord, "unknown record '" + record_id + "'");
  }
  const AnnotationRecord& r = it->second;

  std::optional<VaccineLabel> outcome;
  if (decision.kind == Decision::Kind::kAccept) {
    if (!r.proposed) {
      throw Error(ErrorCode::kInvalidArgument, "record '" + record_id + "' has no proposal to accept");
    }
    outcome = r.proposed->label;
  } else if (decision.kind == Decision::Kind::kCorrect) {
    if (!decision.label) throw Error(ErrorCode::kInvalidArgument, "correction requires a label");
    outcome = decision.label;
  }

  // A repeated submission of a decision already recorded for this reviewer.
  if (outcome && r.decided()) {
    if (r.reviewer == reviewer && r.final_label->same_identity(*outcome)) return r;
    if (r.second_opinion && r.second_opinion->reviewer == reviewer &&
        r.second_opinion->label.same_identity(*outcome)) {
      return r;
    }
  }

  const TimestampMs at = now();
  if (!lease_active(r, at) || r.lease->reviewer != reviewer) {
    throw Error(ErrorCode::kLeaseViolation,
                "record '" + record_id + "' is not leased to '" + reviewer + "'");
  }
  if (decision.kind == Decision::Kind::kCorrect && r.proposed &&
      r.proposed->label.same_identity(*decision.label)) {
    throw Error(ErrorCode::kIdenticalCorrection,
                "correction equals the proposal; accept it instead");
  }

  LogEvent e;
  e.ts = at;
  e.record_id = record_id;
  e.reviewer = reviewer;
  switch (decision.kind) {
    case Decision::Kind::kAccept: e.action = "accept"; break;
    case Decision::Kind::kCorrect:
      e.action = "correct";
      e.label = decision.label;
      break;
    case Decision::Kind::kSkip: e.action = "skip"; break;
  }
  commit(std::move(e));
  return state_.records.at(record_id);
}

Agreement AnnotationStore::agreement(const std::string& reviewer_a, const std::string& reviewer_b,
                                     const Lexicon& lexicon) const {
  std::shared_lock lock(mu_);
  Agreement result;
  std::size_t agree = 0;
  for (const auto& [id, r] : state_.records) {
    if (!r.decided() || !r.second_opinion) continue;
    const auto& first = r.reviewer;
    const auto& second = r.second_opinion->reviewer;
    if (!((first == reviewer_a && second == reviewer_b) || (first == reviewer_b && second == reviewer_a))) {
      continue;
    }
    ++result.dual_reviewed;
    agree += lexicon.equivalent(*r.final_label, r.second_opinion->label) ? 1 : 0;
  }
  if (result.dual_reviewed == 0) {
    throw Error(ErrorCode::kNoDualReviews,
                "no records reviewed by both '" + reviewer_a + "' and '" + reviewer_b + "'");
  }
  result.ratio = static_cast<double>(agree) / static_cast<double>(result.dual_reviewed);
  return result;
}

StoreStats AnnotationStore::stats(const Lexicon& lexicon) const {
  std::shared_lock lock(mu_);
  StoreStats s;
  const TimestampMs at = now();
  std::size_t agree = 0;
  for (const auto& [id, r] : state_.records) {
    ++s.total;
    switch (r.status) {
      case RecordStatus::kPending: ++s.pending; break;
      case RecordStatus::kSkipped: ++s.skipped; break;
      case RecordStatus::kAccepted: ++s.accepted; break;
      case RecordStatus::kCorrected: ++s.corrected; break;
    }
    if (lease_active(r, at)) ++s.leased;
    if (r.decided() && r.second_opinion) {
      ++s.dual_reviewed;
      agree += lexicon.equivalent(*r.final_label, r.second_opinion->label) ? 1 : 0;
    }
  }
  if (s.dual_reviewed > 0) s.agreement = static_cast<double>(agree) / static_cast<double>(s.dual_reviewed);
  return s;
}

ExportResult AnnotationStore::export_dataset(const Lexicon& lexicon) const {
  std::shared_lock lock(mu_);
  ExportResult out;
  std::size_t examples = 0;
  std::size_t no = 0;
  std::size_t unspecified = 0;
  std::map<std::string, std::size_t> named;
  for (const auto& id : state_.order) {
    const AnnotationRecord& r = state_.records.at(id);
    if (!r.decided()) continue;
    const VaccineLabel& label = *r.final_label;
    ordered_json line;
    line["messages"] = ordered_json::array({
        {{"role", "system"}, {"content", ExtractionPrompt()}},
        {{"role", "user"}, {"content", UserText(r.note)}},
        {{"role", "assistant"},
         {"content", "{\"Vaccination\": " + json(label.label_string()).dump() + "}"}},
    });
    out.jsonl += line.dump();
    out.jsonl += '\n';
    ++examples;
    switch (label.variant()) {
      case VaccineLabel::Variant::kNo: ++no; break;
      case VaccineLabel::Variant::kUnspecified: ++unspecified; break;
      case VaccineLabel::Variant::kNamed: ++named[label.canonical_id()]; break;
    }
  }
  if (examples == 0) throw Error(ErrorCode::kNothingToExport, "no accepted or corrected records to export");

  out.manifest["schema_version"] = 1;
  out.manifest["format"] = "chat-jsonl";
  out.manifest["examples"] = examples;
  out.manifest["class_counts"] = {{"No", no}, {"Unspecified", unspecified}, {"Named", named}};
  out.manifest["lexicon_version"] = lexicon.version();
  out.manifest["lexicon_sha256"] = lexicon.content_hash();
  out.manifest["prompt_version"] = std::string(ExtractionPromptVersion());
  out.manifest["prompt_sha256"] = Sha256Hex(ExtractionPrompt());
  out.manifest["data_sha256"] = Sha256Hex(out.jsonl);
  return out;
}

std::optional<AnnotationRecord> AnnotationStore::find(const std::string& record_id) const {
  std::shared_lock lock(mu_);
  auto it = state_.records.find(record_id);
  if (it == state_.records.end()) return std::nullopt;
  return it->second;
}

StoreState AnnotationStore::state() const {
  std::shared_lock lock(mu_);
  return state_;
}

std::vector<LogEvent> AnnotationStore::events() const {
  std::shared_lock lock(mu_);
  return events_;
}

}  // namespace vaxtract
