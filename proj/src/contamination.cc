// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/contamination.h"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>

#include "bimath/core_model.h"
#include "bimath/errors.h"

namespace bimath {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();

bool IsWs(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

std::string TrimWs(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && IsWs(s[b])) ++b;
  while (e > b && IsWs(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

}  // namespace

class Automaton {
 public:
  Automaton(std::span<const Pattern> patterns, std::size_t dense_budget);

  std::uint32_t Step(std::uint32_t s, unsigned char byte) const {
    const std::uint16_t c = class_[byte];
    if (c == 0) return 0;
    while (true) {
      if (s < dense_count_) return dense_[s * classes_ + c];
      for (std::uint32_t e = edge_begin_[s]; e < edge_begin_[s + 1]; ++e) {
        if (edge_class_[e] == c) return edge_to_[e];
      }
      s = fail_[s];
    }
  }
  bool reports(std::uint32_t s) const { return reports_[s] != 0; }
  template <typename Fn>
  void ForEachOutput(std::uint32_t s, Fn&& fn) const {
    if (out_pattern_[s] != kNone) fn(out_pattern_[s]);
    for (std::uint32_t t = out_link_[s]; t != kNone; t = out_link_[t]) {
      fn(out_pattern_[t]);
    }
  }
  std::size_t pattern_length(std::size_t p) const { return lengths_[p]; }
  std::size_t max_length() const { return max_length_; }

 private:
  std::array<std::uint16_t, 256> class_{};
  std::uint32_t classes_ = 1;
  std::uint32_t dense_count_ = 0;
  std::vector<std::uint32_t> dense_;
  std::vector<std::uint32_t> edge_begin_;
  std::vector<std::uint16_t> edge_class_;
  std::vector<std::uint32_t> edge_to_;
  std::vector<std::uint32_t> fail_;
  std::vector<std::uint32_t> out_pattern_;
  std::vector<std::uint32_t> out_link_;
  std::vector<std::uint8_t> reports_;
  std::vector<std::size_t> lengths_;
  std::size_t max_length_ = 0;
};

Automaton::Automaton(std::span<const Pattern> patterns,
                     std::size_t dense_budget) {
  // Byte classes: 0 for bytes absent from every pattern.
  std::array<bool, 256> used{};
  for (const auto& p : patterns) {
    for (unsigned char c : p.text) used[c] = true;
  }
  for (int b = 0; b < 256; ++b) {
    if (used[b]) class_[b] = static_cast<std::uint16_t>(classes_++);
  }

  // Trie with sparse children, ids in insertion order.
  struct Node {
    std::vector<std::pair<std::uint16_t, std::uint32_t>> children;
    std::uint32_t pattern = kNone;
    std::uint32_t depth = 0;
  };
  std::vector<Node> trie(1);
  for (std::size_t pi = 0; pi < patterns.size(); ++pi) {
    std::uint32_t s = 0;
    for (unsigned char byte : patterns[pi].text) {
      const std::uint16_t c = class_[byte];
      std::uint32_t next = kNone;
      for (const auto& [cls, to] : trie[s].children) {
        if (cls == c) {
          next = to;
          break;
        }
      }
      if (next == kNone) {
        next = static_cast<std::uint32_t>(trie.size());
        trie[s].children.emplace_back(c, next);
        trie.push_back(Node{{}, kNone, trie[s].depth + 1});
      }
      s = next;
    }
    trie[s].pattern = static_cast<std::uint32_t>(pi);
    lengths_.push_back(patterns[pi].text.size());
    max_length_ = std::max(max_length_, patterns[pi].text.size());
  }

  // Renumber breadth-first so every failure target precedes its source.
  const std::size_t n = trie.size();
  std::vector<std::uint32_t> order;
  order.reserve(n);
  order.push_back(0);
  for (std::size_t i = 0; i < order.size(); ++i) {
    auto& children = trie[order[i]].children;
    std::sort(children.begin(), children.end());
    for (const auto& [cls, to] : children) order.push_back(to);
  }
  std::vector<std::uint32_t> id(n);
  for (std::size_t i = 0; i < n; ++i) id[order[i]] = static_cast<std::uint32_t>(i);

  edge_begin_.assign(n + 1, 0);
  out_pattern_.assign(n, kNone);
  for (std::size_t i = 0; i < n; ++i) {
    const Node& node = trie[order[i]];
    out_pattern_[i] = node.pattern;
    edge_begin_[i + 1] = edge_begin_[i] +
                         static_cast<std::uint32_t>(node.children.size());
    for (const auto& [cls, to] : node.children) {
      edge_class_.push_back(cls);
      edge_to_.push_back(id[to]);
    }
  }
  auto child = [&](std::uint32_t s, std::uint16_t c) {
    for (std::uint32_t e = edge_begin_[s]; e < edge_begin_[s + 1]; ++e) {
      if (edge_class_[e] == c) return edge_to_[e];
    }
    return kNone;
  };

  fail_.assign(n, 0);
  out_link_.assign(n, kNone);
  for (std::uint32_t s = 0; s < n; ++s) {
    for (std::uint32_t e = edge_begin_[s]; e < edge_begin_[s + 1]; ++e) {
      const std::uint32_t t = edge_to_[e];
      const std::uint16_t c = edge_class_[e];
      std::uint32_t f = 0;
      if (s != 0) {
        std::uint32_t r = fail_[s];
        while (true) {
          const std::uint32_t next = child(r, c);
          if (next != kNone) {
            f = next;
            break;
          }
          if (r == 0) break;
          r = fail_[r];
        }
      }
      fail_[t] = f;
      out_link_[t] = out_pattern_[f] != kNone ? f : out_link_[f];
    }
  }
  reports_.assign(n, 0);
  for (std::size_t s = 0; s < n; ++s) {
    reports_[s] = out_pattern_[s] != kNone || out_link_[s] != kNone;
  }

  // Dense rows for a breadth-first prefix of states.
  const std::size_t row_bytes = std::size_t{classes_} * sizeof(std::uint32_t);
  dense_count_ = static_cast<std::uint32_t>(
      std::clamp<std::size_t>(dense_budget / row_bytes, 1, n));
  dense_.assign(std::size_t{dense_count_} * classes_, 0);
  for (std::uint32_t s = 0; s < dense_count_; ++s) {
    std::uint32_t* row = &dense_[std::size_t{s} * classes_];
    if (s != 0) {
      const std::uint32_t* fail_row = &dense_[std::size_t{fail_[s]} * classes_];
      std::copy(fail_row, fail_row + classes_, row);
    }
    for (std::uint32_t e = edge_begin_[s]; e < edge_begin_[s + 1]; ++e) {
      row[edge_class_[e]] = edge_to_[e];
    }
  }
}

std::string CollapseWhitespace(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_space = false;
  for (unsigned char c : text) {
    if (IsWs(c)) {
      if (!in_space) out += ' ';
      in_space = true;
    } else {
      out += static_cast<char>(c);
      in_space = false;
    }
  }
  return out;
}

std::size_t CodePointLength(std::string_view text) {
  std::size_t n = 0;
  for (unsigned char c : text) n += (c & 0xC0) != 0x80;
  return n;
}

PatternSet compile_patterns(std::span<const PatternItem> items,
                            Normalization normalization,
                            std::size_t min_length,
                            std::size_t dense_budget_bytes) {
  if (items.empty()) throw std::invalid_argument("no patterns given");
  PatternSet set;
  set.normalization = normalization;
  set.min_length = min_length;
  std::map<std::string, std::size_t> index;
  for (const auto& item : items) {
    std::string text = normalization == Normalization::kWhitespaceCollapse
                           ? CollapseWhitespace(TrimWs(item.text))
                           : item.text;
    if (text.empty() || CodePointLength(text) < min_length) {
      set.excluded_ids.push_back(item.item_id);
      continue;
    }
    auto [it, inserted] = index.emplace(text, set.patterns.size());
    if (inserted) set.patterns.push_back({std::move(text), {}});
    set.patterns[it->second].item_ids.push_back(item.item_id);
  }
  if (set.patterns.empty()) {
    throw std::invalid_argument(fmt::format(
        "all {} patterns are shorter than {} characters", items.size(),
        min_length));
  }
  set.automaton =
      std::make_shared<const Automaton>(set.patterns, dense_budget_bytes);
  return set;
}

std::vector<PatternItem> LoadPatternItems(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string content = ss.str();
  std::vector<PatternItem> out;
  const auto first_line = content.substr(0, content.find('\n'));
  bool is_dataset = false;
  try {
    is_dataset = json::parse(first_line).contains("question_ko");
  } catch (const json::exception& e) {
    throw ValidationError(path.string() + ":1: " + e.what());
  }
  if (is_dataset) {
    for (const auto& p : ParseDataset(content)) {
      out.push_back({p.id + ":ko", p.question_ko});
      out.push_back({p.id + ":en", p.question_en});
    }
    return out;
  }
  std::istringstream lines(content);
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (TrimWs(line).empty()) continue;
    try {
      const json j = json::parse(line);
      out.push_back({j.at("id").get<std::string>(),
                     j.at("text").get<std::string>()});
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: {}", path.string(), number,
                                        e.what()));
    }
  }
  return out;
}

std::size_t MatchReport::total_hits() const {
  std::size_t n = 0;
  for (const auto& h : hits) n += h.size();
  return n;
}

// --- Sources ----------------------------------------------------------------

JsonlSource::JsonlSource(const fs::path& path)
    : in_(std::make_unique<std::ifstream>(path, std::ios::binary)) {
  if (!*in_) throw ValidationError("cannot read " + path.string());
}

bool JsonlSource::next(Document& doc) {
  std::string line;
  while (std::getline(*in_, line)) {
    if (TrimWs(line).empty()) continue;
    try {
      json j = json::parse(line);
      if (!j.is_object() || !j.contains("id") || !j.contains("text") ||
          !j["text"].is_string()) {
        ++malformed_;
        continue;
      }
      doc.id = j["id"].is_string() ? j["id"].get<std::string>()
                                   : j["id"].dump();
      doc.url.reset();
      if (auto it = j.find("url"); it != j.end() && it->is_string() &&
                                   !it->get_ref<const std::string&>().empty()) {
        doc.url = it->get<std::string>();
      }
      doc.text = std::move(j["text"].get_ref<std::string&>());
      return true;
    } catch (const json::exception&) {
      ++malformed_;
    }
  }
  return false;
}

DirectorySource::DirectorySource(const fs::path& root) : root_(root) {
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (entry.is_regular_file()) files_.push_back(entry.path());
  }
  std::sort(files_.begin(), files_.end());
}

bool DirectorySource::next(Document& doc) {
  if (next_ >= files_.size()) return false;
  const fs::path& path = files_[next_++];
  std::ifstream in(path, std::ios::binary);
  doc.id = fs::relative(path, root_).generic_string();
  doc.url.reset();
  doc.text.assign(std::istreambuf_iterator<char>(in),
                  std::istreambuf_iterator<char>());
  return true;
}

namespace {

// Concatenates several sources.
class ChainSource : public DocumentSource {
 public:
  explicit ChainSource(std::vector<std::unique_ptr<DocumentSource>> parts)
      : parts_(std::move(parts)) {}
  bool next(Document& doc) override {
    while (current_ < parts_.size()) {
      if (parts_[current_]->next(doc)) return true;
      ++current_;
    }
    return false;
  }
  std::uint64_t malformed() const override {
    std::uint64_t n = 0;
    for (const auto& p : parts_) n += p->malformed();
    return n;
  }

 private:
  std::vector<std::unique_ptr<DocumentSource>> parts_;
  std::size_t current_ = 0;
};

}  // namespace

std::unique_ptr<DocumentSource> OpenCorpus(const fs::path& path) {
  if (!fs::exists(path)) throw ValidationError("no corpus at " + path.string());
  if (!fs::is_directory(path)) return std::make_unique<JsonlSource>(path);
  std::vector<fs::path> jsonl;
  for (const auto& entry : fs::recursive_directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
      jsonl.push_back(entry.path());
    }
  }
  if (jsonl.empty()) return std::make_unique<DirectorySource>(path);
  std::sort(jsonl.begin(), jsonl.end());
  std::vector<std::unique_ptr<DocumentSource>> parts;
  for (const auto& p : jsonl) parts.push_back(std::make_unique<JsonlSource>(p));
  return std::make_unique<ChainSource>(std::move(parts));
}

// --- Scanning ---------------------------------------------------------------

StreamScanner::StreamScanner(const PatternSet& set, OnHit on_hit)
    : set_(set), automaton_(*set.automaton), on_hit_(std::move(on_hit)) {
  if (set.normalization == Normalization::kWhitespaceCollapse) {
    std::size_t size = 1;
    while (size < automaton_.max_length() + 1) size <<= 1;
    origin_.assign(size, 0);
    origin_mask_ = size - 1;
  }
}

void StreamScanner::Reset() {
  state_ = 0;
  fed_ = 0;
  emitted_ = 0;
  in_space_ = false;
}

void StreamScanner::Feed(std::string_view chunk) {
  const Automaton& a = automaton_;
  std::uint32_t s = state_;
  if (set_.normalization == Normalization::kNone) {
    const auto* data = reinterpret_cast<const unsigned char*>(chunk.data());
    const std::size_t size = chunk.size();
    for (std::size_t i = 0; i < size; ++i) {
      s = a.Step(s, data[i]);
      if (a.reports(s)) [[unlikely]] {
        const std::uint64_t end = fed_ + i + 1;
        a.ForEachOutput(s, [&](std::uint32_t p) {
          on_hit_(p, end - a.pattern_length(p));
        });
      }
    }
    fed_ += size;
    state_ = s;
    return;
  }
  for (std::size_t i = 0; i < chunk.size(); ++i) {
    unsigned char c = static_cast<unsigned char>(chunk[i]);
    if (IsWs(c)) {
      if (in_space_) continue;
      in_space_ = true;
      c = ' ';
    } else {
      in_space_ = false;
    }
    origin_[emitted_ & origin_mask_] = fed_ + i;
    ++emitted_;
    s = a.Step(s, c);
    if (a.reports(s)) [[unlikely]] {
      a.ForEachOutput(s, [&](std::uint32_t p) {
        const std::uint64_t start = emitted_ - a.pattern_length(p);
        on_hit_(p, origin_[start & origin_mask_]);
      });
    }
  }
  fed_ += chunk.size();
  state_ = s;
}

namespace {

bool UrlAllowed(const Document& doc, std::span<const std::string> prefixes) {
  if (prefixes.empty() || !doc.url) return true;
  return std::any_of(prefixes.begin(), prefixes.end(),
                     [&](const std::string& p) {
                       return doc.url->starts_with(p);
                     });
}

struct WorkerState {
  std::vector<std::vector<Hit>> hits;
  std::uint64_t documents = 0;
  std::uint64_t bytes = 0;
};

void ScanOne(const PatternSet& set, StreamScanner& scanner,
             const std::string*& current_id, WorkerState& w,
             const Document& doc) {
  current_id = &doc.id;
  scanner.Reset();
  scanner.Feed(doc.text);
  ++w.documents;
  w.bytes += doc.text.size();
  (void)set;
}

}  // namespace

MatchReport scan_stream(const PatternSet& set, DocumentSource& source,
                        const ScanOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  const int workers = std::max(1, options.workers);
  std::vector<WorkerState> states(static_cast<std::size_t>(workers));
  for (auto& w : states) w.hits.resize(set.patterns.size());
  std::uint64_t filtered = 0;

  auto make_scanner = [&](WorkerState& w, const std::string*& current) {
    return StreamScanner(set, [&w, &current](std::size_t p, std::uint64_t off) {
      w.hits[p].push_back({*current, off});
    });
  };

  if (workers == 1) {
    const std::string* current = nullptr;
    StreamScanner scanner = make_scanner(states[0], current);
    Document doc;
    while (source.next(doc)) {
      if (!UrlAllowed(doc, options.source_prefixes)) {
        ++filtered;
        continue;
      }
      ScanOne(set, scanner, current, states[0], doc);
    }
  } else {
    std::mutex mu;
    std::condition_variable cv;
    std::deque<Document> queue;
    bool done = false;
    const std::size_t capacity = static_cast<std::size_t>(workers) * 2;
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) {
      pool.emplace_back([&, t] {
        WorkerState& w = states[static_cast<std::size_t>(t)];
        const std::string* current = nullptr;
        StreamScanner scanner = make_scanner(w, current);
        while (true) {
          Document doc;
          {
            std::unique_lock lock(mu);
            cv.wait(lock, [&] { return !queue.empty() || done; });
            if (queue.empty()) return;
            doc = std::move(queue.front());
            queue.pop_front();
          }
          cv.notify_all();
          ScanOne(set, scanner, current, w, doc);
        }
      });
    }
    Document doc;
    while (source.next(doc)) {
      if (!UrlAllowed(doc, options.source_prefixes)) {
        ++filtered;
        continue;
      }
      std::unique_lock lock(mu);
      cv.wait(lock, [&] { return queue.size() < capacity; });
      queue.push_back(std::move(doc));
      lock.unlock();
      cv.notify_all();
      doc = Document{};
    }
    {
      std::lock_guard lock(mu);
      done = true;
    }
    cv.notify_all();
    pool.clear();
  }

  MatchReport report;
  report.hits.resize(set.patterns.size());
  for (auto& w : states) {
    report.documents_scanned += w.documents;
    report.bytes_scanned += w.bytes;
    for (std::size_t p = 0; p < w.hits.size(); ++p) {
      auto& dst = report.hits[p];
      dst.insert(dst.end(), std::make_move_iterator(w.hits[p].begin()),
                 std::make_move_iterator(w.hits[p].end()));
    }
  }
  for (auto& h : report.hits) std::sort(h.begin(), h.end());
  report.malformed_records = source.malformed();
  report.filtered_documents = filtered;
  report.elapsed_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started)
          .count();
  return report;
}

std::vector<std::pair<std::size_t, std::uint64_t>> ScanText(
    const PatternSet& set, std::string_view text) {
  std::vector<std::pair<std::size_t, std::uint64_t>> out;
  StreamScanner scanner(set, [&](std::size_t p, std::uint64_t off) {
    out.emplace_back(p, off);
  });
  scanner.Feed(text);
  std::sort(out.begin(), out.end());
  return out;
}

SourceMatch match_source_documents(DocumentSource& corpus,
                                   std::span<const std::string> source_urls) {
  SourceMatch out;
  Document doc;
  while (corpus.next(doc)) {
    if (!doc.url) {
      out.no_url.push_back(doc.id);
    } else if (std::any_of(source_urls.begin(), source_urls.end(),
                           [&](const std::string& p) {
                             return doc.url->starts_with(p);
                           })) {
      out.matched.push_back(doc.id);
    } else {
      out.unmatched.push_back(doc.id);
    }
  }
  return out;
}

json ReportJson(const PatternSet& set, const MatchReport& report) {
  json patterns = json::array();
  for (std::size_t p = 0; p < set.patterns.size(); ++p) {
    if (report.hits[p].empty()) continue;
    json hits = json::array();
    for (const auto& h : report.hits[p]) {
      hits.push_back({{"document_id", h.document_id}, {"offset", h.offset}});
    }
    patterns.push_back({{"item_ids", set.patterns[p].item_ids},
                        {"hits", hits}});
  }
  return json{{"patterns", set.patterns.size()},
              {"excluded_ids", set.excluded_ids},
              {"normalization",
               set.normalization == Normalization::kNone ? "none" : "ws"},
              {"min_length", set.min_length},
              {"documents_scanned", report.documents_scanned},
              {"bytes_scanned", report.bytes_scanned},
              {"malformed_records", report.malformed_records},
              {"filtered_documents", report.filtered_documents},
              {"elapsed_seconds", report.elapsed_seconds},
              {"total_hits", report.total_hits()},
              {"matches", patterns}};
}

std::string ReportText(const PatternSet& set, const MatchReport& report) {
  std::string out = fmt::format(
      "patterns {} (excluded {})  documents {}  bytes {}  malformed {}  "
      "filtered {}\n",
      set.patterns.size(), set.excluded_ids.size(), report.documents_scanned,
      report.bytes_scanned, report.malformed_records,
      report.filtered_documents);
  const double mb = static_cast<double>(report.bytes_scanned) / 1e6;
  out += fmt::format("elapsed {:.2f} s  ({:.1f} MB/s)\n", report.elapsed_seconds,
                     report.elapsed_seconds > 0 ? mb / report.elapsed_seconds
                                                : 0.0);
  if (report.total_hits() == 0) {
    out += "no matches\n";
    return out;
  }
  for (std::size_t p = 0; p < set.patterns.size(); ++p) {
    for (const auto& h : report.hits[p]) {
      std::string ids;
      for (const auto& id : set.patterns[p].item_ids) {
        ids += (ids.empty() ? "" : ",") + id;
      }
      out += fmt::format("{}\t{}\t{}\n", ids, h.document_id, h.offset);
    }
  }
  return out;
}

}  // namespace bimath
