// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/curation.h"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <sqlite3.h>

namespace bimath {
namespace {

using json = nlohmann::json;
using Code = CurationError::Code;

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS items (
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  item_id TEXT NOT NULL UNIQUE,
  kind TEXT NOT NULL,
  source_ref TEXT NOT NULL,
  candidate_text TEXT NOT NULL,
  problem TEXT,
  target_field TEXT NOT NULL,
  status TEXT NOT NULL,
  edited_text TEXT,
  reviewer_note TEXT
);
CREATE TABLE IF NOT EXISTS history (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  item_id TEXT NOT NULL REFERENCES items(item_id),
  from_status TEXT,
  to_status TEXT NOT NULL,
  reviewer TEXT NOT NULL,
  at_ms INTEGER NOT NULL,
  note TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS history_item ON history(item_id, id);
CREATE TRIGGER IF NOT EXISTS history_append_only_u BEFORE UPDATE ON history
BEGIN SELECT RAISE(ABORT, 'history is append-only'); END;
CREATE TRIGGER IF NOT EXISTS history_append_only_d BEFORE DELETE ON history
BEGIN SELECT RAISE(ABORT, 'history is append-only'); END;
)sql";

// Minimal RAII prepared statement.
class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error(std::string("sqlite prepare: ") + sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& Bind(int i, std::string_view text) {
    sqlite3_bind_text(stmt_, i, text.data(), static_cast<int>(text.size()),
                      SQLITE_TRANSIENT);
    return *this;
  }
  Stmt& Bind(int i, const std::string& text) {
    return Bind(i, std::string_view(text));
  }
  Stmt& Bind(int i, const std::optional<std::string>& text) {
    if (text) return Bind(i, std::string_view(*text));
    sqlite3_bind_null(stmt_, i);
    return *this;
  }
  Stmt& Bind(int i, std::int64_t v) {
    sqlite3_bind_int64(stmt_, i, v);
    return *this;
  }
  // True while rows remain.
  bool Step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error(std::string("sqlite step: ") + sqlite3_errmsg(db_));
  }
  std::optional<std::string> Text(int col) const {
    if (sqlite3_column_type(stmt_, col) == SQLITE_NULL) return std::nullopt;
    const auto* p =
        reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return std::string(p, static_cast<std::size_t>(
                              sqlite3_column_bytes(stmt_, col)));
  }
  std::int64_t Int(int col) const { return sqlite3_column_int64(stmt_, col); }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

std::string ProblemText(const std::optional<BilingualProblem>& p) {
  return p ? json(*p).dump() : std::string();
}

bool SameContent(const ReviewItem& a, const ReviewItem& b) {
  return a.kind == b.kind && a.source_ref == b.source_ref &&
         a.candidate_text == b.candidate_text &&
         ProblemText(a.problem) == ProblemText(b.problem) &&
         a.target_field == b.target_field;
}

void ValidateNew(const ReviewItem& item) {
  if (item.item_id.empty()) {
    throw CurationError(Code::kInvalid, "item_id must be non-empty");
  }
  if (item.candidate_text.empty()) {
    throw CurationError(Code::kInvalid,
                        "item " + item.item_id + " has no candidate_text");
  }
  if (item.target_field != "question_ko" &&
      item.target_field != "question_en") {
    throw CurationError(Code::kInvalid,
                        "target_field must be question_ko or question_en");
  }
}

class Transaction {
 public:
  explicit Transaction(sqlite3* db) : db_(db) { Run("BEGIN IMMEDIATE"); }
  ~Transaction() {
    if (!done_) sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  }
  void Commit() {
    Run("COMMIT");
    done_ = true;
  }

 private:
  void Run(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err ? err : "unknown";
      sqlite3_free(err);
      throw Error(std::string("sqlite: ") + msg);
    }
  }
  sqlite3* db_;
  bool done_ = false;
};

}  // namespace

std::string_view ItemKindName(ItemKind k) {
  return k == ItemKind::kOcr ? "ocr" : "translation";
}

std::string_view ReviewStatusName(ReviewStatus s) {
  switch (s) {
    case ReviewStatus::kPending:
      return "pending";
    case ReviewStatus::kAccepted:
      return "accepted";
    case ReviewStatus::kEdited:
      return "edited";
    case ReviewStatus::kRejected:
      return "rejected";
  }
  return "pending";
}

std::string_view DecisionName(Decision d) {
  switch (d) {
    case Decision::kAccept:
      return "accept";
    case Decision::kEdit:
      return "edit";
    case Decision::kReject:
      return "reject";
  }
  return "reject";
}

std::optional<ItemKind> ParseItemKind(std::string_view s) {
  if (s == "ocr") return ItemKind::kOcr;
  if (s == "translation") return ItemKind::kTranslation;
  return std::nullopt;
}

std::optional<ReviewStatus> ParseReviewStatus(std::string_view s) {
  for (auto st : {ReviewStatus::kPending, ReviewStatus::kAccepted,
                  ReviewStatus::kEdited, ReviewStatus::kRejected}) {
    if (ReviewStatusName(st) == s) return st;
  }
  return std::nullopt;
}

std::optional<Decision> ParseDecision(std::string_view s) {
  for (auto d : {Decision::kAccept, Decision::kEdit, Decision::kReject}) {
    if (DecisionName(d) == s) return d;
  }
  return std::nullopt;
}

bool IsTerminal(ReviewStatus s) { return s != ReviewStatus::kPending; }

const std::string& ReviewItem::final_text() const {
  return status == ReviewStatus::kEdited && edited_text ? *edited_text
                                                         : candidate_text;
}

void to_json(json& j, const HistoryEntry& h) {
  j = json{{"from", h.from ? json(ReviewStatusName(*h.from)) : json(nullptr)},
           {"to", ReviewStatusName(h.to)},
           {"reviewer", h.reviewer},
           {"at_ms", h.at_ms},
           {"note", h.note}};
}

void to_json(json& j, const ReviewItem& item) {
  j = json{{"item_id", item.item_id},
           {"kind", ItemKindName(item.kind)},
           {"source_ref", item.source_ref},
           {"candidate_text", item.candidate_text},
           {"status", ReviewStatusName(item.status)},
           {"edited_text", item.edited_text ? json(*item.edited_text)
                                            : json(nullptr)},
           {"reviewer_note", item.reviewer_note ? json(*item.reviewer_note)
                                                : json(nullptr)},
           {"history", item.history},
           {"target_field", item.target_field}};
  j["problem"] = item.problem ? json(*item.problem) : json(nullptr);
}

void from_json(const json& j, ReviewItem& item) {
  item = ReviewItem{};
  item.item_id = j.at("item_id").get<std::string>();
  const auto kind = ParseItemKind(j.value("kind", std::string("translation")));
  if (!kind) throw CurationError(Code::kInvalid, "unknown item kind");
  item.kind = *kind;
  item.source_ref = j.value("source_ref", std::string());
  item.candidate_text = j.at("candidate_text").get<std::string>();
  if (auto it = j.find("problem"); it != j.end() && !it->is_null()) {
    item.problem = it->get<BilingualProblem>();
  }
  item.target_field = j.value("target_field", std::string("question_ko"));
}

std::int64_t SystemClockMs() {
  return std::chrono::duration_cast<std::chrono::milliseconds>(
             std::chrono::system_clock::now().time_since_epoch())
      .count();
}

std::string StripDollarMath(std::string_view text) {
  std::string out;
  std::size_t i = 0;
  while (i < text.size()) {
    const bool opener = text[i] == '$' && (i == 0 || text[i - 1] != '\\');
    if (!opener) {
      out += text[i++];
      continue;
    }
    std::size_t close = i + 1;
    while (close < text.size() &&
           !(text[close] == '$' && text[close - 1] != '\\')) {
      ++close;
    }
    if (close >= text.size()) {
      out.append(text.substr(i));
      break;
    }
    const std::string_view inner = text.substr(i + 1, close - i - 1);
    const bool latex =
        std::any_of(inner.begin(), inner.end(), [](char c) { return c == '\\'; });
    if (latex) {
      out.append(inner);
    } else {
      out.append(text.substr(i, close - i + 1));
    }
    i = close + 1;
  }
  return out;
}

CurationStore::CurationStore(const std::filesystem::path& db_path,
                             CurationOptions options)
    : options_(std::move(options)) {
  if (!options_.clock) options_.clock = SystemClockMs;
  if (sqlite3_open(db_path.c_str(), &db_) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    throw Error("cannot open review store " + db_path.string() + ": " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  Exec("PRAGMA journal_mode=WAL");
  Exec("PRAGMA synchronous=FULL");
  Exec("PRAGMA foreign_keys=ON");
  Exec(kSchema);
  Stmt last(db_, "SELECT COALESCE(MAX(at_ms), 0) FROM history");
  if (last.Step()) last_history_ms_ = last.Int(0);
}

CurationStore::~CurationStore() { sqlite3_close(db_); }

void CurationStore::Exec(const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown";
    sqlite3_free(err);
    throw Error("sqlite: " + msg);
  }
}

std::optional<ReviewItem> CurationStore::Load(const std::string& item_id) {
  Stmt q(db_,
         "SELECT kind, source_ref, candidate_text, problem, target_field, "
         "status, edited_text, reviewer_note FROM items WHERE item_id = ?");
  q.Bind(1, item_id);
  if (!q.Step()) return std::nullopt;
  ReviewItem item;
  item.item_id = item_id;
  item.kind = *ParseItemKind(*q.Text(0));
  item.source_ref = *q.Text(1);
  item.candidate_text = *q.Text(2);
  if (auto p = q.Text(3); p && !p->empty()) {
    item.problem = json::parse(*p).get<BilingualProblem>();
  }
  item.target_field = *q.Text(4);
  item.status = *ParseReviewStatus(*q.Text(5));
  item.edited_text = q.Text(6);
  item.reviewer_note = q.Text(7);

  Stmt h(db_,
         "SELECT from_status, to_status, reviewer, at_ms, note FROM history "
         "WHERE item_id = ? ORDER BY id");
  h.Bind(1, item_id);
  while (h.Step()) {
    HistoryEntry e;
    if (auto from = h.Text(0)) e.from = ParseReviewStatus(*from);
    e.to = *ParseReviewStatus(*h.Text(1));
    e.reviewer = *h.Text(2);
    e.at_ms = h.Int(3);
    e.note = *h.Text(4);
    item.history.push_back(std::move(e));
  }
  return item;
}

void CurationStore::PruneLeases(std::int64_t now) {
  std::erase_if(leases_, [&](const auto& kv) {
    return kv.second.expires_at_ms <= now;
  });
}

EnqueueResult CurationStore::enqueue(std::span<const ReviewItem> items) {
  std::lock_guard lock(mu_);
  EnqueueResult result;
  Transaction tx(db_);
  const std::int64_t now = std::max(options_.clock(), last_history_ms_);
  std::map<std::string, ReviewItem> batch;
  for (ReviewItem item : items) {
    ValidateNew(item);
    if (options_.strip_dollar_math) {
      item.candidate_text = StripDollarMath(item.candidate_text);
    }
    std::optional<ReviewItem> existing = Load(item.item_id);
    if (!existing) {
      if (auto it = batch.find(item.item_id); it != batch.end()) {
        existing = it->second;
      }
    }
    if (existing) {
      if (!SameContent(*existing, item)) {
        throw CurationError(Code::kConflict,
                            "item " + item.item_id +
                                " already queued with different content");
      }
      ++result.unchanged;
      continue;
    }
    Stmt ins(db_,
             "INSERT INTO items (item_id, kind, source_ref, candidate_text, "
             "problem, target_field, status) VALUES (?, ?, ?, ?, ?, ?, "
             "'pending')");
    const std::string problem = ProblemText(item.problem);
    ins.Bind(1, item.item_id)
        .Bind(2, ItemKindName(item.kind))
        .Bind(3, item.source_ref)
        .Bind(4, item.candidate_text)
        .Bind(5, problem.empty() ? std::optional<std::string>()
                                 : std::optional<std::string>(problem))
        .Bind(6, item.target_field);
    ins.Step();
    Stmt hist(db_,
              "INSERT INTO history (item_id, from_status, to_status, "
              "reviewer, at_ms, note) VALUES (?, NULL, 'pending', '', ?, '')");
    hist.Bind(1, item.item_id).Bind(2, now);
    hist.Step();
    batch.emplace(item.item_id, item);
    ++result.added;
  }
  tx.Commit();
  last_history_ms_ = now;
  return result;
}

std::optional<LeasedItem> CurationStore::next_pending(
    const std::string& reviewer) {
  if (reviewer.empty()) {
    throw CurationError(Code::kInvalid, "reviewer id must be non-empty");
  }
  std::lock_guard lock(mu_);
  const std::int64_t now = options_.clock();
  PruneLeases(now);
  for (const auto& [id, lease] : leases_) {
    if (lease.reviewer == reviewer) {
      if (auto item = Load(id); item && !IsTerminal(item->status)) {
        return LeasedItem{std::move(*item), lease};
      }
    }
  }
  Stmt q(db_,
         "SELECT item_id FROM items WHERE status = 'pending' ORDER BY seq");
  while (q.Step()) {
    const std::string id = *q.Text(0);
    if (leases_.contains(id)) continue;
    Lease lease{id, reviewer, now + options_.lease_duration.count()};
    leases_[id] = lease;
    return LeasedItem{*Load(id), lease};
  }
  return std::nullopt;
}

ReviewItem CurationStore::submit_decision(const std::string& item_id,
                                          const std::string& reviewer,
                                          Decision decision,
                                          std::optional<std::string> edited_text,
                                          std::optional<std::string> note) {
  std::lock_guard lock(mu_);
  const std::int64_t now = options_.clock();
  PruneLeases(now);
  std::optional<ReviewItem> item = Load(item_id);
  if (!item) throw CurationError(Code::kNotFound, "no item " + item_id);
  if (IsTerminal(item->status)) {
    throw CurationError(Code::kConflict,
                        "item " + item_id + " is already " +
                            std::string(ReviewStatusName(item->status)));
  }
  auto lease = leases_.find(item_id);
  if (lease == leases_.end() || lease->second.reviewer != reviewer) {
    throw CurationError(Code::kConflict, "reviewer " + reviewer +
                                             " holds no lease on " + item_id);
  }
  if (decision == Decision::kEdit && (!edited_text || edited_text->empty())) {
    throw CurationError(Code::kInvalid, "edit requires edited_text");
  }
  if (decision != Decision::kEdit) edited_text.reset();
  const ReviewStatus to = decision == Decision::kAccept ? ReviewStatus::kAccepted
                          : decision == Decision::kEdit ? ReviewStatus::kEdited
                                                        : ReviewStatus::kRejected;
  const std::int64_t at = std::max(now, last_history_ms_);
  {
    Transaction tx(db_);
    Stmt upd(db_,
             "UPDATE items SET status = ?, edited_text = ?, reviewer_note = ? "
             "WHERE item_id = ? AND status = 'pending'");
    upd.Bind(1, ReviewStatusName(to))
        .Bind(2, edited_text)
        .Bind(3, note)
        .Bind(4, item_id);
    upd.Step();
    Stmt hist(db_,
              "INSERT INTO history (item_id, from_status, to_status, "
              "reviewer, at_ms, note) VALUES (?, 'pending', ?, ?, ?, ?)");
    hist.Bind(1, item_id)
        .Bind(2, ReviewStatusName(to))
        .Bind(3, reviewer)
        .Bind(4, at)
        .Bind(5, note.value_or(""));
    hist.Step();
    tx.Commit();
  }
  last_history_ms_ = at;
  leases_.erase(lease);
  return *Load(item_id);
}

std::optional<ReviewItem> CurationStore::get(const std::string& item_id) {
  std::lock_guard lock(mu_);
  return Load(item_id);
}

std::optional<Lease> CurationStore::lease_of(const std::string& item_id) {
  std::lock_guard lock(mu_);
  PruneLeases(options_.clock());
  auto it = leases_.find(item_id);
  if (it == leases_.end()) return std::nullopt;
  return it->second;
}

std::vector<ExportedItem> CurationStore::export_reviewed() {
  std::lock_guard lock(mu_);
  std::vector<std::string> ids;
  {
    Stmt q(db_,
           "SELECT item_id FROM items WHERE status IN ('accepted', 'edited') "
           "ORDER BY seq");
    while (q.Step()) ids.push_back(*q.Text(0));
  }
  std::vector<ExportedItem> out;
  for (const auto& id : ids) {
    ReviewItem item = *Load(id);
    ExportedItem e;
    e.item_id = id;
    e.kind = item.kind;
    e.status = item.status;
    e.text = item.final_text();
    if (item.problem) {
      BilingualProblem p = *item.problem;
      (item.target_field == "question_en" ? p.question_en : p.question_ko) =
          e.text;
      e.problem = std::move(p);
    }
    out.push_back(std::move(e));
  }
  return out;
}

QueueStats CurationStore::stats() {
  std::lock_guard lock(mu_);
  PruneLeases(options_.clock());
  QueueStats s;
  Stmt q(db_, "SELECT status, COUNT(*) FROM items GROUP BY status");
  while (q.Step()) {
    const auto status = *ParseReviewStatus(*q.Text(0));
    const auto n = static_cast<std::size_t>(q.Int(1));
    switch (status) {
      case ReviewStatus::kPending:
        s.pending = n;
        break;
      case ReviewStatus::kAccepted:
        s.accepted = n;
        break;
      case ReviewStatus::kEdited:
        s.edited = n;
        break;
      case ReviewStatus::kRejected:
        s.rejected = n;
        break;
    }
  }
  s.leased = leases_.size();
  return s;
}

std::string ExportJsonl(std::span<const ExportedItem> items) {
  std::string out;
  for (const auto& e : items) {
    if (e.problem) {
      out += json(*e.problem).dump() + "\n";
    } else {
      out += json{{"id", e.item_id},
                  {"kind", ItemKindName(e.kind)},
                  {"status", ReviewStatusName(e.status)},
                  {"text", e.text}}
                 .dump() +
             "\n";
    }
  }
  return out;
}

std::vector<ReviewItem> LoadReviewItems(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  std::vector<ReviewItem> out;
  try {
    const auto first = content.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && content[first] == '[') {
      for (const auto& j : json::parse(content)) out.push_back(j.get<ReviewItem>());
      return out;
    }
    std::istringstream lines(content);
    std::string line;
    while (std::getline(lines, line)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      out.push_back(json::parse(line).get<ReviewItem>());
    }
  } catch (const json::exception& e) {
    throw ValidationError("bad review items in " + path.string() + ": " +
                          e.what());
  }
  return out;
}

}  // namespace bimath
