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

#ifndef VAXTRACT_ANNOTATION_HPP_
#define VAXTRACT_ANNOTATION_HPP_

#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "vaxtract/corpus.hpp"
#include "vaxtract/label.hpp"
#include "vaxtract/lexicon.hpp"

namespace vaxtract {

// Milliseconds since the Unix epoch.
using TimestampMs = std::int64_t;
using Clock = std::function<TimestampMs()>;

Clock SystemClock();
// "2026-10-17T05:19:00.123Z"
std::string FormatTimestamp(TimestampMs ts);
TimestampMs ParseTimestamp(const std::string& iso);

struct Proposal {
  VaccineLabel label;
  Engine engine = Engine::kRules;
  std::optional<Span> matched_span;
  friend bool operator==(const Proposal&, const Proposal&) = default;
};

enum class RecordStatus { kPending, kAccepted, kCorrected, kSkipped };
std::string_view to_string(RecordStatus status);

struct SecondOpinion {
  std::string reviewer;
  VaccineLabel label;
  TimestampMs decided_at = 0;
  friend bool operator==(const SecondOpinion&, const SecondOpinion&) = default;
};

struct Lease {
  std::string reviewer;
  TimestampMs expires_at = 0;
  friend bool operator==(const Lease&, const Lease&) = default;
};

struct AnnotationRecord {
  TriageNote note;
  std::optional<Proposal> proposed;  // absent when the engine failed
  RecordStatus status = RecordStatus::kPending;
  std::optional<VaccineLabel> final_label;
  std::string reviewer;
  std::optional<TimestampMs> decided_at;
  std::optional<SecondOpinion> second_opinion;
  bool dual_review = false;  // routed for a second opinion once decided
  std::uint64_t enqueued_seq = 0;
  std::uint64_t queue_seq = 0;  // position in the review queue; skips move it back
  std::optional<Lease> lease;

  bool decided() const {
    return status == RecordStatus::kAccepted || status == RecordStatus::kCorrected;
  }
  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

// One line of the decision log.
struct LogEvent {
  std::uint64_t seq = 0;
  TimestampMs ts = 0;
  std::string record_id;
  std::string reviewer;
  std::string action;  // enqueue | lease | accept | correct | skip
  std::optional<VaccineLabel> label;
  // enqueue only
  std::optional<TriageNote> note;
  std::optional<Proposal> proposal;
  bool dual_review = false;
  // lease only
  std::optional<TimestampMs> lease_expires;

  friend bool operator==(const LogEvent&, const LogEvent&) = default;
};

std::string LogEventToJsonLine(const LogEvent& event);
LogEvent LogEventFromJsonLine(const std::string& line);
std::vector<LogEvent> ReadLog(const std::string& path);

struct StoreState {
  std::map<std::string, AnnotationRecord> records;
  std::vector<std::string> order;  // enqueue order
  std::uint64_t last_seq = 0;
  friend bool operator==(const StoreState&, const StoreState&) = default;
};

struct Decision {
  enum class Kind { kAccept, kCorrect, kSkip };
  Kind kind = Kind::kAccept;
  std::optional<VaccineLabel> label;  // kCorrect only

  static Decision Accept() { return {Kind::kAccept, std::nullopt}; }
  static Decision Correct(VaccineLabel label) { return {Kind::kCorrect, std::move(label)}; }
  static Decision Skip() { return {Kind::kSkip, std::nullopt}; }
};

struct StoreOptions {
  // Append-only decision log; empty keeps the store in memory.
  std::string log_path;
  std::chrono::milliseconds lease_duration{std::chrono::minutes(10)};
  // Fraction of records routed to a second reviewer after the first decision.
  double dual_review_fraction = 0.0;
  // A snapshot of the full state is written next to the log every this many
  // events; 0 disables snapshots.
  std::size_t snapshot_interval = 200;
  Clock clock;  // defaults to the system clock
};

struct StoreStats {
  std::size_t total = 0;
  std::size_t pending = 0;
  std::size_t skipped = 0;
  std::size_t accepted = 0;
  std::size_t corrected = 0;
  std::size_t leased = 0;
  std::size_t dual_reviewed = 0;
  std::optional<double> agreement;  // over every dual-reviewed record
};

struct Agreement {
  std::size_t dual_reviewed = 0;
  double ratio = 0.0;
};

struct ExportResult {
  std::string jsonl;
  nlohmann::ordered_json manifest;
};

// Proposals for a batch of notes, one per note in order. Results with an
// error or a failed parse become pending records without a proposal.
using BatchEngine = std::function<std::vector<ExtractionResult>(const std::vector<TriageNote>&)>;

// The human review queue. All mutations go through one writer lock, append an
// event to the log and then apply it; replaying the log through the same
// apply step rebuilds the state.
class AnnotationStore {
 public:
  explicit AnnotationStore(StoreOptions options = {});
  // Rebuilds in-memory state from events (no log file is written).
  static AnnotationStore Replay(const std::vector<LogEvent>& events, StoreOptions options = {});

  AnnotationStore(AnnotationStore&& other) noexcept;
  AnnotationStore& operator=(AnnotationStore&&) = delete;

  // Enqueues a pending record for every note not already in the store.
  // Returns the number enqueued.
  std::size_t prelabel(const Dataset& dataset, const BatchEngine& engine);

  // The reviewer's current lease, else the oldest unleased pending or
  // skipped record, else a decided record awaiting a second opinion from
  // someone other than its first reviewer. The record is leased to the
  // reviewer.
  std::optional<AnnotationRecord> next_pending(const std::string& reviewer);

  // Throws kUnknownRecord, kLeaseViolation (record not leased to this
  // reviewer), kIdenticalCorrection, or kInvalidArgument (accept without a
  // proposal, correct without a label). Repeating a decision the reviewer
  // already made returns the record unchanged.
  AnnotationRecord submit_decision(const std::string& record_id, const std::string& reviewer,
                                   const Decision& decision);

  // Throws kNoDualReviews when the pair shares no dual-reviewed record.
  Agreement agreement(const std::string& reviewer_a, const std::string& reviewer_b,
                      const Lexicon& lexicon) const;
  StoreStats stats(const Lexicon& lexicon) const;

  // Throws kNothingToExport when no record is accepted or corrected.
  ExportResult export_dataset(const Lexicon& lexicon) const;

  std::optional<AnnotationRecord> find(const std::string& record_id) const;
  StoreState state() const;
  std::vector<LogEvent> events() const;

  // Writes a snapshot now (no-op for in-memory stores).
  void snapshot() const;
  std::string snapshot_path() const;

 private:
  TimestampMs now() const;
  bool lease_active(const AnnotationRecord& r, TimestampMs now) const;
  // Appends to the log (when persistent), then applies. Caller holds mu_.
  void commit(LogEvent event);
  void apply(const LogEvent& event);
  void load();

  StoreOptions options_;
  StoreState state_;
  std::vector<LogEvent> events_;
  std::ofstream log_;
  mutable std::shared_mutex mu_;
};

void to_json(nlohmann::json& j, const AnnotationRecord& r);
void from_json(const nlohmann::json& j, AnnotationRecord& r);

}  // namespace vaxtract

#endif  // VAXTRACT_ANNOTATION_HPP_
