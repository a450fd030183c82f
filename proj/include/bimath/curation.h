// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Review queue for benchmark items under construction (OCR output or
// machine translation checked against its source).
//
// Items and an append-only history of status changes live in SQLite.
// Leases are held in memory only, so a restart returns every leased item to
// the pending pool while committed decisions survive.

#ifndef BIMATH_CURATION_H_
#define BIMATH_CURATION_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bimath/core_model.h"
#include "bimath/errors.h"

struct sqlite3;

namespace bimath {

enum class ItemKind { kOcr, kTranslation };
enum class ReviewStatus { kPending, kAccepted, kEdited, kRejected };
enum class Decision { kAccept, kEdit, kReject };

std::string_view ItemKindName(ItemKind k);
std::string_view ReviewStatusName(ReviewStatus s);
std::string_view DecisionName(Decision d);
std::optional<ItemKind> ParseItemKind(std::string_view s);
std::optional<ReviewStatus> ParseReviewStatus(std::string_view s);
std::optional<Decision> ParseDecision(std::string_view s);

bool IsTerminal(ReviewStatus s);

struct HistoryEntry {
  std::optional<ReviewStatus> from;  // empty for the enqueue entry
  ReviewStatus to = ReviewStatus::kPending;
  std::string reviewer;
  std::int64_t at_ms = 0;  // milliseconds since the epoch
  std::string note;

  friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

struct ReviewItem {
  std::string item_id;
  ItemKind kind = ItemKind::kTranslation;
  std::string source_ref;  // image path or source-language text
  std::string candidate_text;
  ReviewStatus status = ReviewStatus::kPending;
  std::optional<std::string> edited_text;
  std::optional<std::string> reviewer_note;
  std::vector<HistoryEntry> history;
  // Dataset record the reviewed text is written into on export, with the
  // field that receives it ("question_ko" or "question_en").
  std::optional<BilingualProblem> problem;
  std::string target_field = "question_ko";

  // edited_text when edited, else candidate_text.
  const std::string& final_text() const;
};

void to_json(nlohmann::json& j, const HistoryEntry& h);
void to_json(nlohmann::json& j, const ReviewItem& item);
// Reads the enqueue form: item_id, kind, source_ref, candidate_text and
// optional problem / target_field. Status fields are ignored.
void from_json(const nlohmann::json& j, ReviewItem& item);

struct Lease {
  std::string item_id;
  std::string reviewer;
  std::int64_t expires_at_ms = 0;
};

struct LeasedItem {
  ReviewItem item;
  Lease lease;
};

// Error category for the HTTP layer: 404, 409 and 400 respectively.
class CurationError : public Error {
 public:
  enum class Code { kNotFound, kConflict, kInvalid };
  CurationError(Code code, const std::string& what)
      : Error(what), code_(code) {}
  Code code() const { return code_; }

 private:
  Code code_;
};

using Clock = std::function<std::int64_t()>;  // milliseconds since the epoch

std::int64_t SystemClockMs();

struct CurationOptions {
  std::chrono::milliseconds lease_duration = std::chrono::minutes(15);
  Clock clock = SystemClockMs;
  // Strip `$...$` around LaTeX in candidate text at enqueue.
  bool strip_dollar_math = false;
};

// Removes `$` delimiters around spans that contain a LaTeX command, leaving
// currency amounts such as "$5" alone.
std::string StripDollarMath(std::string_view text);

struct EnqueueResult {
  std::size_t added = 0;
  std::size_t unchanged = 0;
};

struct QueueStats {
  std::size_t pending = 0;  // includes leased
  std::size_t leased = 0;
  std::size_t accepted = 0;
  std::size_t edited = 0;
  std::size_t rejected = 0;
  std::size_t total() const { return pending + accepted + edited + rejected; }
};

struct ExportedItem {
  std::string item_id;
  ItemKind kind = ItemKind::kTranslation;
  ReviewStatus status = ReviewStatus::kAccepted;
  std::string text;
  std::optional<BilingualProblem> problem;  // with the reviewed text applied
};

class CurationStore {
 public:
  // `db_path` may be ":memory:".
  CurationStore(const std::filesystem::path& db_path,
                CurationOptions options = {});
  ~CurationStore();
  CurationStore(const CurationStore&) = delete;
  CurationStore& operator=(const CurationStore&) = delete;

  // All-or-nothing. New ids enter as pending; identical re-enqueues are
  // no-ops; an existing id with different content throws a kConflict
  // CurationError.
  EnqueueResult enqueue(std::span<const ReviewItem> items);

  // The reviewer's current unexpired lease if any, else the oldest pending
  // item without a live lease. nullopt when none is available.
  std::optional<LeasedItem> next_pending(const std::string& reviewer);

  // Requires a live lease held by `reviewer`. Edit requires non-empty
  // edited_text.
  ReviewItem submit_decision(const std::string& item_id,
                             const std::string& reviewer, Decision decision,
                             std::optional<std::string> edited_text = {},
                             std::optional<std::string> note = {});

  std::optional<ReviewItem> get(const std::string& item_id);
  std::optional<Lease> lease_of(const std::string& item_id);

  // Accepted and edited items in enqueue order.
  std::vector<ExportedItem> export_reviewed();
  QueueStats stats();

 private:
  void Exec(const char* sql);
  std::optional<ReviewItem> Load(const std::string& item_id);
  void PruneLeases(std::int64_t now);

  sqlite3* db_ = nullptr;
  CurationOptions options_;
  std::mutex mu_;
  std::map<std::string, Lease> leases_;  // by item id
  std::int64_t last_history_ms_ = 0;
};

// One JSON line per exported item: a dataset record when the item carries a
// problem, else {id, kind, status, text}.
std::string ExportJsonl(std::span<const ExportedItem> items);

// JSON array or JSONL of enqueue-form items.
std::vector<ReviewItem> LoadReviewItems(const std::filesystem::path& path);

}  // namespace bimath

#endif  // BIMATH_CURATION_H_
