// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Exact-substring contamination scan of a document corpus against a set of
// benchmark question strings.
//
// The matcher is a multi-pattern automaton over byte classes. States near
// the root get dense transition rows with failure transitions folded in;
// deeper states keep sparse child lists and fall back along failure links.
// The dense region is as deep as a fixed memory budget allows.

#ifndef BIMATH_CONTAMINATION_H_
#define BIMATH_CONTAMINATION_H_

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace bimath {

enum class Normalization { kNone, kWhitespaceCollapse };

// Runs of ASCII whitespace become one space. Leading and trailing
// whitespace is kept as a single space.
std::string CollapseWhitespace(std::string_view text);

// Number of UTF-8 code points.
std::size_t CodePointLength(std::string_view text);

struct PatternItem {
  std::string item_id;
  std::string text;
};

struct Pattern {
  std::string text;                  // normalized
  std::vector<std::string> item_ids;  // every item sharing this text
};

class Automaton;

struct PatternSet {
  std::vector<Pattern> patterns;
  Normalization normalization = Normalization::kNone;
  std::size_t min_length = 32;
  // Items dropped for being shorter than min_length.
  std::vector<std::string> excluded_ids;
  std::shared_ptr<const Automaton> automaton;
};

inline constexpr std::size_t kDefaultMinLength = 32;

// Throws std::invalid_argument when `items` is empty or every item is
// shorter than `min_length` code points after normalization.
PatternSet compile_patterns(std::span<const PatternItem> items,
                            Normalization normalization,
                            std::size_t min_length = kDefaultMinLength,
                            std::size_t dense_budget_bytes = 64u << 20);

// Pattern items from a benchmark dataset (question_ko and question_en of
// every item, ids suffixed ":ko" / ":en") or from a JSONL file of
// {id, text}.
std::vector<PatternItem> LoadPatternItems(const std::filesystem::path& path);

struct Hit {
  std::string document_id;
  std::uint64_t offset = 0;  // byte offset in the original document

  friend bool operator==(const Hit&, const Hit&) = default;
  friend auto operator<=>(const Hit&, const Hit&) = default;
};

struct MatchReport {
  // Parallel to PatternSet::patterns; sorted by (document, offset).
  std::vector<std::vector<Hit>> hits;
  std::uint64_t documents_scanned = 0;
  std::uint64_t bytes_scanned = 0;
  std::uint64_t malformed_records = 0;
  std::uint64_t filtered_documents = 0;  // skipped by the URL filter
  double elapsed_seconds = 0.0;

  std::size_t total_hits() const;
};

struct Document {
  std::string id;
  std::optional<std::string> url;
  std::string text;
};

// Pull-style document stream. next() returns false at the end.
class DocumentSource {
 public:
  virtual ~DocumentSource() = default;
  virtual bool next(Document& doc) = 0;
  virtual std::uint64_t malformed() const { return 0; }
};

// Line-delimited {id, url?, text}. Malformed lines are counted and skipped.
class JsonlSource : public DocumentSource {
 public:
  explicit JsonlSource(const std::filesystem::path& path);
  bool next(Document& doc) override;
  std::uint64_t malformed() const override { return malformed_; }

 private:
  std::unique_ptr<std::istream> in_;
  std::uint64_t malformed_ = 0;
};

// Every regular file below a directory, in path order; the relative path is
// the document id.
class DirectorySource : public DocumentSource {
 public:
  explicit DirectorySource(const std::filesystem::path& root);
  bool next(Document& doc) override;

 private:
  std::filesystem::path root_;
  std::vector<std::filesystem::path> files_;
  std::size_t next_ = 0;
};

// A directory of *.jsonl files or raw text, or a single JSONL file.
std::unique_ptr<DocumentSource> OpenCorpus(const std::filesystem::path& path);

// Incremental scanner for one document delivered in chunks.
class StreamScanner {
 public:
  using OnHit = std::function<void(std::size_t pattern, std::uint64_t offset)>;

  StreamScanner(const PatternSet& set, OnHit on_hit);
  void Feed(std::string_view chunk);
  // Resets state for the next document.
  void Reset();
  std::uint64_t bytes_fed() const { return fed_; }

 private:
  const PatternSet& set_;
  const Automaton& automaton_;
  OnHit on_hit_;
  std::uint32_t state_ = 0;
  std::uint64_t fed_ = 0;        // original bytes
  std::uint64_t emitted_ = 0;    // normalized bytes
  bool in_space_ = false;
  // Original offsets of the most recent normalized bytes (ring buffer).
  std::vector<std::uint64_t> origin_;
  std::size_t origin_mask_ = 0;
};

struct ScanOptions {
  int workers = 1;
  // When non-empty, documents with a URL matching none of these prefixes
  // are skipped. Documents without a URL are always scanned.
  std::vector<std::string> source_prefixes;
};

MatchReport scan_stream(const PatternSet& set, DocumentSource& source,
                        const ScanOptions& options = {});

// Convenience for in-memory text.
std::vector<std::pair<std::size_t, std::uint64_t>> ScanText(
    const PatternSet& set, std::string_view text);

struct SourceMatch {
  std::vector<std::string> matched;    // URL under a configured source
  std::vector<std::string> unmatched;  // URL elsewhere
  std::vector<std::string> no_url;     // routed to the full scan
};

SourceMatch match_source_documents(DocumentSource& corpus,
                                   std::span<const std::string> source_urls);

nlohmann::json ReportJson(const PatternSet& set, const MatchReport& report);
std::string ReportText(const PatternSet& set, const MatchReport& report);

}  // namespace bimath

#endif  // BIMATH_CONTAMINATION_H_
