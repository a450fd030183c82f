// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Acceptance gate. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <csignal>
#include <cstring>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include <fmt/core.h>
#include <nlohmann/json.hpp>

#include "bimath/answer_verification.h"
#include "bimath/arena.h"
#include "bimath/contamination.h"
#include "bimath/curation.h"
#include "bimath/eval_harness.h"
#include "bimath/hashing.h"
#include "bimath/mock_backend.h"
#include "bimath/msi_pipeline.h"
#include "bimath/rational.h"
#include "bimath/ust_datagen.h"
#include "test_util.h"

namespace bimath {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using testing::Fixture;
using testing::LoadJson;
using testing::Slurp;
using testing::TempDir;

// Collects failures for one criterion.
class Check {
 public:
  void That(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 10) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  bool ok() const { return failed_ == 0; }
  std::string Summary() const {
    std::string s = fmt::format("{} failed check(s)", failed_);
    for (const auto& f : failures_) s += "\n    " + f;
    return s;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t failed_ = 0;
};

double Seconds(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       since)
      .count();
}

GatewayOptions NoBackoff() {
  GatewayOptions options;
  options.backoff_base = std::chrono::milliseconds(0);
  return options;
}

Gateway MockGateway(const fs::path& fixture) {
  return Gateway(MockBackend::FromFile(fixture), NoBackoff());
}

// ---------------------------------------------------------------------------

void EloArithmetic(Check& c) {
  c.That(expected_score(1000, 1000) == 0.5, "E(1000,1000) != 0.5");
  c.That(std::abs(expected_score(1200, 1000) - 0.759746) <= 1e-6,
         fmt::format("E(1200,1000) = {:.9f}", expected_score(1200, 1000)));
  c.That(update_rating(1000, 1, 0.5, 4) == 1002,
         fmt::format("update = {}", update_rating(1000, 1, 0.5, 4)));

  // Per-match zero sum: the winner gains exactly what the loser gives up.
  std::vector<MatchResult> log;
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    MatchResult m;
    m.question_id = std::to_string(i);
    m.contestant_a = "a";
    m.contestant_b = "b";
    m.verdict = rng() % 2 ? MatchVerdict::kWinA : MatchVerdict::kWinB;
    log.push_back(m);
  }
  Ratings prev = {{"a", 1000.0}, {"b", 1000.0}};
  for (std::size_t i = 1; i <= log.size(); ++i) {
    const Ratings now = ReplayElo(std::span(log).first(i), 4, 1000);
    const double da = now.at("a") - prev.at("a");
    const double db = now.at("b") - prev.at("b");
    c.That(da == -db, fmt::format("match {}: {} vs {}", i, da, db));
    c.That(da != 0.0, fmt::format("match {} moved nothing", i));
    prev = now;
  }
}

// Scripted three-way log with a handful of inconclusive matches.
std::vector<MatchResult> ScriptedLog() {
  const char* names[] = {"UST", "K2K", "MSI"};
  // Win probability of the first contestant in each pairing.
  const double p_first[] = {0.8, 0.65, 0.3};
  std::vector<MatchResult> log;
  std::mt19937_64 rng(20260101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const int pair = i % 3;
    MatchResult m;
    m.question_id = fmt::format("q{:03d}", i);
    m.contestant_a = names[pair == 2 ? 1 : 0];
    m.contestant_b = names[pair == 0 ? 1 : 2];
    const double draw = u(rng);
    m.verdict = i % 17 == 5          ? MatchVerdict::kInconclusive
                : draw < p_first[pair] ? MatchVerdict::kWinA
                                       : MatchVerdict::kWinB;
    log.push_back(m);
  }
  return log;
}

// Independent bootstrap replay: resample with the documented seeding
// (seed_seq over the seed halves and the iteration, mt19937_64, modulo n)
// and play the resampled matches in order from the initial rating.
std::vector<std::map<std::string, double>> OracleBootstrap(
    const std::vector<MatchResult>& log, double k, double initial, int iters,
    std::uint64_t seed) {
  std::vector<MatchResult> pool;
  for (const auto& m : log) {
    if (m.verdict != MatchVerdict::kInconclusive) pool.push_back(m);
  }
  std::vector<std::map<std::string, double>> out;
  for (int it = 0; it < iters; ++it) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed),
                      static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(it)};
    std::mt19937_64 gen(seq);
    std::map<std::string, double> r;
    for (const auto& m : pool) {
      r[m.contestant_a] = initial;
      r[m.contestant_b] = initial;
    }
    for (std::size_t j = 0; j < pool.size(); ++j) {
      const auto& m = pool[gen() % pool.size()];
      double& ra = r[m.contestant_a];
      double& rb = r[m.contestant_b];
      const double ea = 1.0 / (1.0 + std::pow(10.0, (rb - ra) / 400.0));
      const double sa = m.verdict == MatchVerdict::kWinA ? 1.0 : 0.0;
      const double delta = k * (sa - ea);
      ra += delta;
      rb -= delta;
    }
    out.push_back(std::move(r));
  }
  return out;
}

void BootstrapDeterminism(Check& c) {
  const auto log = ScriptedLog();
  constexpr std::uint64_t kSeed = 0x5eed5eed1234ULL;
  const EloResult first = compute_elo(log, 4, 1000, 1000, kSeed);
  const EloResult second = compute_elo(log, 4, 1000, 1000, kSeed);
  c.That(first.iterations.size() == 1000, "iteration count");
  for (const auto& [name, interval] : first.ratings) {
    c.That(second.ratings.at(name).median == interval.median,
           name + ": medians differ between runs");
    c.That(interval.lower <= interval.median &&
               interval.median <= interval.upper,
           name + ": interval out of order");
  }
  c.That(first.iterations == second.iterations, "iterations differ");

  const auto oracle = OracleBootstrap(log, 4, 1000, 1000, kSeed);
  for (std::size_t it = 0; it < oracle.size(); ++it) {
    for (const auto& [name, rating] : oracle[it]) {
      const auto got = first.iterations[it].find(name);
      c.That(got != first.iterations[it].end() &&
                 std::abs(got->second - rating) <= 1e-9,
             fmt::format("iteration {} {}: oracle {}", it, name, rating));
    }
  }
  const auto other = compute_elo(log, 4, 1000, 1000, kSeed + 1);
  c.That(other.iterations != first.iterations,
         "a different seed gave the same resamples");
}

void TokenMetric(Check& c) {
  const auto dataset = LoadDataset(Fixture("harness/dataset.jsonl"));
  const auto expected = LoadJson(Fixture("harness/expected.json"));
  for (const char* mode : {"K2K", "K2E", "E2E"}) {
    Gateway gateway = MockGateway(Fixture("harness/mock.json"));
    const RunReport report =
        run_eval(dataset, mode_for(mode), gateway, SamplingConfig{});
    const auto& e = expected["modes"][mode];
    const double want = e["token_consumption_num"].get<double>() /
                        e["token_consumption_den"].get<double>();
    c.That(report.token_consumption() == want,
           fmt::format("{}: L = {} want {}", mode, report.token_consumption(),
                       want));
  }
  // Arena ledger form.
  const std::vector<TokenUsage> ledger = {{10, 5}, {0, 1}, {7, 0}};
  c.That(token_consumption(ledger) == (25.0 + 3.0 + 7.0) / 3.0,
         "arena token_consumption");

  const double ratio = TokenRatio(7854, 11764);
  c.That(std::abs(ratio - 0.667) <= 0.005,
         fmt::format("UST/MSI ratio {:.4f}", ratio));
  c.That(fmt::format("{:.0f}%", std::floor(ratio * 100)) == "66%",
         fmt::format("ratio reads as {:.0f}%", std::floor(ratio * 100)));
}

void AnswerVerification(Check& c) {
  std::istringstream lines(Slurp(Fixture("answer_cases.jsonl")));
  std::size_t n = 0;
  for (std::string line; std::getline(lines, line);) {
    if (line.empty()) continue;
    const auto row = json::parse(line);
    const std::string output = row["output"];
    const auto span = find_boxed_span(output);
    const bool span_ok = row["span"].is_null()
                             ? !span.has_value()
                             : span == row["span"].get<std::string>();
    const auto got = extract_boxed(output);
    const std::string kind = row["kind"];
    bool value_ok = false;
    if (kind == "numeric") {
      value_ok = got.kind == AnswerKind::kNumeric &&
                 *got.numeric ==
                     *Rational::FromString(row["value"].get<std::string>());
    } else if (kind == "choice") {
      value_ok = got.kind == AnswerKind::kChoice &&
                 *got.choice == row["value"].get<std::string>()[0];
    } else {
      value_ok = got.kind == AnswerKind::kUnparseable;
    }
    c.That(span_ok && value_ok, "case: " + output);
    ++n;
  }
  c.That(n >= 200, fmt::format("only {} cases", n));
}

// Every file under `dir`, keyed by relative path.
std::map<std::string, std::string> Snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file()) {
      files[fs::relative(entry.path(), dir).string()] = Slurp(entry.path());
    }
  }
  return files;
}

struct ModeRun {
  RunReport report;
  std::vector<MsiTrace> traces;
};

ModeRun RunMode(const std::string& mode,
                const std::vector<BilingualProblem>& dataset,
                const fs::path& mock) {
  Gateway gateway = MockGateway(mock);
  EvalOptions options;
  options.timestamp = "2026-01-01T00:00:00Z";
  SamplingConfig sampling;
  sampling.seed = 7;
  if (mode == "MSI") {
    MsiRun r = run_msi(dataset, gateway, sampling, options);
    return {std::move(r.report), std::move(r.traces)};
  }
  if (mode == "TE2E") return {run_te2e(dataset, gateway, sampling, options), {}};
  return {run_eval(dataset, mode_for(mode), gateway, sampling, options), {}};
}

std::map<std::string, std::string> Verdicts(const RunReport& report) {
  std::map<std::string, std::string> out;
  for (const auto& r : report.records) {
    if (r.scored) out[r.problem_id] = std::string(VerdictName(r.verdict));
  }
  return out;
}

void CheckNoUnscripted(Check& c, const std::string& mode,
                       const RunReport& report) {
  for (const auto& r : report.records) {
    c.That(r.error.find("unscripted") == std::string::npos,
           fmt::format("{} {}: {}", mode, r.problem_id, r.error));
  }
}

void HarnessDeterminism(Check& c) {
  const auto dataset = LoadDataset(Fixture("harness/dataset.jsonl"));
  const auto expected = LoadJson(Fixture("harness/expected.json"));
  const auto mock = Fixture("harness/mock.json");
  const std::vector<std::string> modes = {"K2K", "K2E", "E2E", "TE2E", "MSI"};
  TempDir tmp;
  std::vector<RunReport> reports;
  for (const auto& mode : modes) {
    std::map<std::string, std::string> snapshots[2];
    RunReport kept;
    for (int rep = 0; rep < 2; ++rep) {
      ModeRun run = RunMode(mode, dataset, mock);
      const fs::path dir = tmp / fmt::format("{}-{}", mode, rep);
      SaveRun(run.report, dir);
      if (!run.traces.empty()) SaveTraces(run.traces, dir);
      snapshots[rep] = Snapshot(dir);
      kept = std::move(run.report);
    }
    c.That(snapshots[0] == snapshots[1], mode + ": run dirs differ");
    c.That(!snapshots[0].empty(), mode + ": nothing saved");
    CheckNoUnscripted(c, mode, kept);

    const auto& e = expected["modes"][mode];
    for (const auto& [column, counts] : e["columns"].items()) {
      const auto it = kept.accuracy.by_column.find(column);
      const bool ok = it != kept.accuracy.by_column.end() &&
                      it->second.correct == counts["correct"] &&
                      it->second.total == counts["total"];
      c.That(ok, fmt::format("{} {}: want {}/{}", mode, column,
                             counts["correct"].get<int>(),
                             counts["total"].get<int>()));
    }
    c.That(kept.accuracy.by_column.size() == e["columns"].size(),
           mode + ": column count");
    c.That(std::abs(kept.accuracy.average - e["average"].get<double>()) <=
               1e-9,
           fmt::format("{}: average {} want {}", mode, kept.accuracy.average,
                       e["average"].get<double>()));
    const auto verdicts = Verdicts(kept);
    std::map<std::string, std::string> want_verdicts;
    for (const auto& [id, v] : e["verdicts"].items()) want_verdicts[id] = v;
    c.That(verdicts == want_verdicts, mode + ": verdicts differ");
    c.That(kept.ledger.input_tokens == e["ledger"]["input_tokens"] &&
               kept.ledger.output_tokens == e["ledger"]["output_tokens"],
           mode + ": ledger differs");
    const double want_l = e["token_consumption_num"].get<double>() /
                          e["token_consumption_den"].get<double>();
    c.That(kept.token_consumption() == want_l, mode + ": token consumption");
    reports.push_back(std::move(kept));
  }

  const DeltaTable table = compare_runs(reports);
  const auto& d = expected["deltas"];
  c.That(table.columns == d["columns"].get<std::vector<std::string>>(),
         "delta columns");
  c.That(table.rows.size() == d["rows"].size(), "delta row count");
  for (std::size_t i = 0; i < table.rows.size() && i < d["rows"].size(); ++i) {
    const auto& want = d["rows"][i];
    const auto& got = table.rows[i];
    for (std::size_t col = 0; col < want["deltas"].size(); ++col) {
      c.That(col < got.deltas.size() && got.deltas[col] &&
                 std::abs(*got.deltas[col] -
                          want["deltas"][col].get<double>()) <= 1e-9,
             fmt::format("{} delta {}", want["mode"].get<std::string>(), col));
    }
    c.That(std::abs(got.average_delta - want["average_delta"].get<double>()) <=
               1e-9,
           fmt::format("{} average delta", want["mode"].get<std::string>()));
  }
  for (std::size_t col = 0; col < d["mean_deltas"].size(); ++col) {
    c.That(col < table.mean_deltas.size() && table.mean_deltas[col] &&
               std::abs(*table.mean_deltas[col] -
                        d["mean_deltas"][col].get<double>()) <= 1e-9,
           fmt::format("mean delta {}", col));
  }
  c.That(std::abs(table.mean_average_delta -
                  d["mean_average_delta"].get<double>()) <= 1e-9,
         "mean average delta");
}

void MsiInvariant(Check& c) {
  const auto dataset = LoadDataset(Fixture("harness/dataset.jsonl"));
  const ModeRun base = RunMode("MSI", dataset, Fixture("harness/mock.json"));
  const ModeRun mutated =
      RunMode("MSI", dataset, Fixture("harness/mock_step3.json"));
  CheckNoUnscripted(c, "MSI", mutated.report);
  const auto a = Verdicts(base.report);
  const auto b = Verdicts(mutated.report);
  c.That(a.size() == dataset.size(), "verdict count");
  std::size_t changed = 0;
  for (const auto& [id, v] : a) {
    const auto it = b.find(id);
    c.That(it != b.end() && it->second == v, id + ": verdict changed");
  }
  // The mutation has to reach step 3 for the comparison to mean anything.
  for (std::size_t i = 0; i < base.traces.size(); ++i) {
    const auto& x = base.traces[i];
    const auto& y = mutated.traces[i];
    if (x.step_outputs != y.step_outputs || x.error != y.error) ++changed;
    if (x.step_outputs.size() >= 2 && y.step_outputs.size() >= 2) {
      c.That(x.step_outputs[0] == y.step_outputs[0] &&
                 x.step_outputs[1] == y.step_outputs[1],
             x.problem_id + ": steps 1-2 changed");
    }
  }
  c.That(changed >= dataset.size() / 2,
         fmt::format("only {} traces changed at step 3", changed));
}

void Datagen(Check& c) {
  const auto seeds = LoadSeeds(Fixture("datagen/seeds.jsonl"));
  const auto expected = LoadJson(Fixture("datagen/expected.json"));
  TempDir tmp;
  int index = 0;
  for (const auto& policy_json : expected["policies"]) {
    DatagenOptions options;
    options.policy.keep =
        policy_json["keep"] == "high" ? KeepSide::kHigh : KeepSide::kLow;
    options.policy.high_threshold = policy_json["high"];
    options.policy.low_threshold = policy_json["low"];
    if (!policy_json["top_k"].is_null()) {
      options.policy.top_k = policy_json["top_k"].get<std::size_t>();
    }
    const std::string label = fmt::format(
        "{}{}", policy_json["keep"].get<std::string>(),
        options.policy.top_k ? fmt::format("/top{}", *options.policy.top_k)
                             : "");
    std::string hashes[2];
    DatagenReport report;
    for (int rep = 0; rep < 2; ++rep) {
      Gateway gateway = MockGateway(Fixture("datagen/mock.json"));
      const fs::path out = tmp / fmt::format("p{}-{}", index, rep);
      report = run_datagen(seeds, gateway, options, out);
      hashes[rep] = report.file_hash;
      c.That(Sha256Hex(Slurp(out / "train.jsonl")) == report.file_hash,
             label + ": file hash does not match the file");
    }
    c.That(hashes[0] == hashes[1], label + ": rerun hash differs");
    c.That(report.input == policy_json["input"], label + ": input");
    c.That(report.emitted == policy_json["emitted"],
           fmt::format("{}: emitted {}", label, report.emitted));
    c.That(report.discarded == policy_json["discarded"],
           fmt::format("{}: discarded {}", label, report.discarded));
    c.That(report.skipped == policy_json["skipped"],
           fmt::format("{}: skipped {}", label, report.skipped));
    c.That(report.emitted + report.discarded + report.skipped == report.input,
           label + ": counts not conserved");
    // Missing reward rules are how the fixture scripts reward failures.
    for (const auto& entry : report.log) {
      c.That(entry.stage == "score" ||
                 entry.reason.find("unscripted") == std::string::npos,
             label + ": " + entry.seed_id + " " + entry.reason);
    }

    std::vector<std::string> ids;
    std::istringstream lines(
        Slurp(tmp / fmt::format("p{}-1", index) / "train.jsonl"));
    for (std::string line; std::getline(lines, line);) {
      const auto row = json::parse(line);
      ids.push_back(row["id"]);
      std::size_t parts = 0;
      try {
        parts = ParseTrainingText(row["text"].get<std::string>(),
                                  options.separators)
                    .size();
      } catch (const std::exception&) {
      }
      c.That(parts == 4, label + ": " + ids.back() + " has " +
                             std::to_string(parts) + " stages");
    }
    c.That(ids == policy_json["emitted_ids"].get<std::vector<std::string>>(),
           label + ": emitted ids differ");
    ++index;
  }
}

// ---------------------------------------------------------------------------
// Contamination scan over a synthetic corpus.

constexpr std::size_t kDocBytes = 1 << 20;
constexpr std::size_t kDocs = 1024;  // 1 GiB in total
constexpr std::size_t kBaseBytes = 64 << 20;

struct Plant {
  std::size_t doc;
  std::size_t offset;
  std::size_t pattern;
};

class SyntheticCorpus : public DocumentSource {
 public:
  SyntheticCorpus(const std::string& base, const std::vector<Plant>& plants,
                  const std::vector<PatternItem>& patterns)
      : base_(base), patterns_(patterns) {
    for (const auto& p : plants) by_doc_[p.doc].push_back(p);
  }

  static void Fill(const std::string& base, std::size_t doc,
                   std::string& out) {
    const std::size_t start = (doc * 7919 * 131) % (base.size() - kDocBytes);
    out.assign(base, start, kDocBytes);
  }

  bool next(Document& doc) override {
    if (next_ == kDocs) return false;
    doc.id = fmt::format("d{:04d}", next_);
    doc.url.reset();
    Fill(base_, next_, doc.text);
    if (auto it = by_doc_.find(next_); it != by_doc_.end()) {
      for (const auto& p : it->second) {
        const auto& text = patterns_[p.pattern].text;
        std::memcpy(doc.text.data() + p.offset, text.data(), text.size());
      }
    }
    ++next_;
    return true;
  }

 private:
  const std::string& base_;
  const std::vector<PatternItem>& patterns_;
  std::map<std::size_t, std::vector<Plant>> by_doc_;
  std::size_t next_ = 0;
};

void Contamination(Check& c) {
  std::mt19937_64 rng(42);
  const char alphabet[] = "abcdefghijklmnopqrstuvwxyz ";
  auto letter = [&] { return alphabet[rng() % 27]; };

  std::string base(kBaseBytes, ' ');
  for (auto& ch : base) ch = letter();

  std::vector<PatternItem> items;
  for (int i = 0; i < 1000; ++i) {
    std::string text(32 + rng() % 65, ' ');
    for (auto& ch : text) ch = letter();
    text.front() = 'q';  // no leading or trailing space
    text.back() = 'z';
    items.push_back({fmt::format("p{:04d}", i), text});
  }

  // 500 non-overlapping plants; the first 10 documents get 20 of them so
  // the naive comparison sees real hits.
  std::vector<Plant> plants;
  std::map<std::size_t, std::vector<std::pair<std::size_t, std::size_t>>> used;
  while (plants.size() < 500) {
    const std::size_t doc =
        plants.size() < 20 ? plants.size() % 10 : rng() % kDocs;
    const std::size_t pattern = rng() % items.size();
    const std::size_t len = items[pattern].text.size();
    const std::size_t offset = rng() % (kDocBytes - len);
    bool overlaps = false;
    for (const auto& [lo, hi] : used[doc]) {
      overlaps |= offset < hi + 1 && lo < offset + len + 1;
    }
    if (overlaps) continue;
    used[doc].emplace_back(offset, offset + len);
    plants.push_back({doc, offset, pattern});
  }

  const PatternSet set = compile_patterns(items, Normalization::kNone);
  c.That(set.patterns.size() == 1000, "pattern count");
  c.That(set.excluded_ids.empty(), "patterns excluded");

  SyntheticCorpus corpus(base, plants, items);
  ScanOptions options;
  options.workers = 1;
  const MatchReport report = scan_stream(set, corpus, options);
  const double mb_per_s =
      static_cast<double>(report.bytes_scanned) / 1e6 / report.elapsed_seconds;

  std::map<std::string, std::size_t> index_of;
  for (std::size_t i = 0; i < set.patterns.size(); ++i) {
    index_of[set.patterns[i].text] = i;
  }
  std::set<std::tuple<std::size_t, std::string, std::uint64_t>> want, got;
  for (const auto& p : plants) {
    want.emplace(index_of.at(items[p.pattern].text),
                 fmt::format("d{:04d}", p.doc), p.offset);
  }
  for (std::size_t i = 0; i < report.hits.size(); ++i) {
    for (const auto& h : report.hits[i]) got.emplace(i, h.document_id, h.offset);
  }
  std::size_t found = 0;
  for (const auto& w : want) found += got.contains(w);
  c.That(found == want.size(),
         fmt::format("recall {}/{}", found, want.size()));
  c.That(got.size() == want.size() && report.total_hits() == want.size(),
         fmt::format("{} hits for {} plants", report.total_hits(),
                     want.size()));
  c.That(report.bytes_scanned == kDocs * kDocBytes, "bytes scanned");
  c.That(report.documents_scanned == kDocs, "documents scanned");

  // Naive oracle over the first 10 documents: every position, every
  // pattern sharing its 32-byte prefix, compared in full.
  std::set<std::tuple<std::size_t, std::string, std::uint64_t>> naive,
      scanned_prefix;
  std::unordered_map<std::string_view, std::vector<std::size_t>> by_prefix;
  for (std::size_t i = 0; i < set.patterns.size(); ++i) {
    by_prefix[std::string_view(set.patterns[i].text).substr(0, 32)]
        .push_back(i);
  }
  SyntheticCorpus replay(base, plants, items);
  Document doc;
  for (std::size_t d = 0; d < 10 && replay.next(doc); ++d) {
    const std::string_view text = doc.text;
    for (std::size_t at = 0; at + 32 <= text.size(); ++at) {
      const auto it = by_prefix.find(text.substr(at, 32));
      if (it == by_prefix.end()) continue;
      for (const std::size_t i : it->second) {
        if (text.substr(at).starts_with(set.patterns[i].text)) {
          naive.emplace(i, doc.id, at);
        }
      }
    }
  }
  for (const auto& g : got) {
    if (std::get<1>(g) < "d0010") scanned_prefix.insert(g);
  }
  c.That(!naive.empty(), "naive oracle saw no hits");
  c.That(naive == scanned_prefix,
         fmt::format("naive {} vs scanner {} on the subsample", naive.size(),
                     scanned_prefix.size()));

  rusage usage{};
  getrusage(RUSAGE_SELF, &usage);
  const double peak_mb = static_cast<double>(usage.ru_maxrss) / 1024.0;
  c.That(mb_per_s >= 100.0, fmt::format("throughput {:.0f} MB/s", mb_per_s));
  c.That(report.elapsed_seconds < 30.0,
         fmt::format("scan took {:.1f} s", report.elapsed_seconds));
  c.That(peak_mb < 512.0, fmt::format("peak memory {:.0f} MB", peak_mb));
  fmt::print("  scan: {:.2f} s, {:.0f} MB/s, peak {:.0f} MB\n",
             report.elapsed_seconds, mb_per_s, peak_mb);
}

// ---------------------------------------------------------------------------
// Curation store.

std::vector<ReviewItem> QueueItems(std::size_t n, const std::string& prefix) {
  std::vector<ReviewItem> items(n);
  for (std::size_t i = 0; i < n; ++i) {
    items[i].item_id = fmt::format("{}{:04d}", prefix, i);
    items[i].kind = i % 3 ? ItemKind::kTranslation : ItemKind::kOcr;
    items[i].source_ref = "source " + items[i].item_id;
    items[i].candidate_text = "candidate " + items[i].item_id;
  }
  return items;
}

// Reference model of the queue, driven alongside the real store.
struct QueueModel {
  struct Entry {
    ReviewStatus status = ReviewStatus::kPending;
    std::string holder;
    std::int64_t expires = 0;
    std::optional<std::string> edited;
  };
  std::vector<std::string> order;
  std::map<std::string, Entry> items;
  std::int64_t lease_ms = 0;

  bool Live(const Entry& e, std::int64_t now) const {
    return !e.holder.empty() && e.expires > now;
  }

  std::optional<std::string> Next(const std::string& reviewer,
                                  std::int64_t now) {
    for (const auto& id : order) {
      const auto& e = items[id];
      if (e.status == ReviewStatus::kPending && Live(e, now) &&
          e.holder == reviewer) {
        return id;
      }
    }
    for (const auto& id : order) {
      auto& e = items[id];
      if (e.status == ReviewStatus::kPending && !Live(e, now)) {
        e.holder = reviewer;
        e.expires = now + lease_ms;
        return id;
      }
    }
    return std::nullopt;
  }

  // Expected error code, or nullopt when the decision should commit.
  std::optional<CurationError::Code> Decide(const std::string& id,
                                            const std::string& reviewer,
                                            Decision decision,
                                            const std::optional<std::string>& text,
                                            std::int64_t now) {
    auto it = items.find(id);
    if (it == items.end()) return CurationError::Code::kNotFound;
    auto& e = it->second;
    if (IsTerminal(e.status)) return CurationError::Code::kConflict;
    if (!Live(e, now) || e.holder != reviewer) {
      return CurationError::Code::kConflict;
    }
    if (decision == Decision::kEdit && (!text || text->empty())) {
      return CurationError::Code::kInvalid;
    }
    e.status = decision == Decision::kAccept ? ReviewStatus::kAccepted
               : decision == Decision::kEdit ? ReviewStatus::kEdited
                                             : ReviewStatus::kRejected;
    if (decision == Decision::kEdit) e.edited = text;
    e.holder.clear();
    return std::nullopt;
  }
};

bool LegalHistory(const ReviewItem& item, std::string* why) {
  const auto& h = item.history;
  if (h.empty() || h[0].from || h[0].to != ReviewStatus::kPending) {
    *why = "missing enqueue entry";
    return false;
  }
  if (item.status == ReviewStatus::kPending) {
    if (h.size() != 1) *why = "pending item with transitions";
    return h.size() == 1;
  }
  if (h.size() != 2 || h[1].from != ReviewStatus::kPending ||
      h[1].to != item.status || h[1].at_ms < h[0].at_ms) {
    *why = "bad transition list";
    return false;
  }
  return true;
}

void CheckExport(Check& c, CurationStore& store,
                 const std::vector<std::string>& order,
                 const std::string& label) {
  std::vector<std::string> want;
  for (const auto& id : order) {
    const auto item = store.get(id);
    if (item && (item->status == ReviewStatus::kAccepted ||
                 item->status == ReviewStatus::kEdited)) {
      want.push_back(id);
    }
  }
  const auto exported = store.export_reviewed();
  std::vector<std::string> got;
  for (const auto& e : exported) {
    got.push_back(e.item_id);
    const auto item = store.get(e.item_id);
    c.That(item && e.status == item->status && e.text == item->final_text(),
           label + ": export text of " + e.item_id);
  }
  c.That(got == want, label + ": export set differs");
}

void CurationSequences(Check& c) {
  std::mt19937_64 rng(7);
  const std::vector<std::string> reviewers = {"ann", "bo", "cy"};
  for (int seq = 0; seq < 1000; ++seq) {
    auto now = std::make_shared<std::int64_t>(1'000'000);
    CurationOptions options;
    options.lease_duration = std::chrono::milliseconds(1000);
    options.clock = [now] { return *now; };
    CurationStore store(":memory:", options);
    QueueModel model;
    model.lease_ms = 1000;
    const auto items = QueueItems(2 + rng() % 5, "s");
    store.enqueue(items);
    for (const auto& item : items) {
      model.order.push_back(item.item_id);
      model.items[item.item_id] = {};
    }
    const std::string label = fmt::format("sequence {}", seq);
    const int steps = 10 + static_cast<int>(rng() % 30);
    for (int step = 0; step < steps; ++step) {
      const std::string& who = reviewers[rng() % reviewers.size()];
      const int op = static_cast<int>(rng() % 10);
      if (op < 3) {
        const auto got = store.next_pending(who);
        const auto want = model.Next(who, *now);
        c.That(got.has_value() == want.has_value() &&
                   (!got || got->item.item_id == *want),
               label + ": next_pending disagrees");
        if (got) {
          c.That(got->lease.reviewer == who &&
                     got->lease.expires_at_ms ==
                         model.items[*want].expires,
                 label + ": lease disagrees");
        }
      } else if (op < 9) {
        // Mostly items the reviewer may hold, sometimes a stranger's or a
        // missing id.
        std::string id = rng() % 12 == 0 ? "missing"
                                         : items[rng() % items.size()].item_id;
        const auto decision = static_cast<Decision>(rng() % 3);
        std::optional<std::string> text;
        if (rng() % 4) text = "fixed " + id;
        else if (rng() % 2) text = "";
        const auto want = model.Decide(id, who, decision, text, *now);
        std::optional<CurationError::Code> got;
        try {
          store.submit_decision(id, who, decision, text);
        } catch (const CurationError& e) {
          got = e.code();
        }
        c.That(got == want, fmt::format("{}: decision on {} by {}", label,
                                        id, who));
      } else {
        *now += static_cast<std::int64_t>(rng() % 1500);
      }
    }
    const auto stats = store.stats();
    std::size_t pending = 0, accepted = 0, edited = 0, rejected = 0;
    for (const auto& id : model.order) {
      const auto item = store.get(id);
      const auto& m = model.items[id];
      std::string why;
      c.That(item && item->status == m.status,
             label + ": status of " + id + " differs from the model");
      c.That(item && LegalHistory(*item, &why), label + ": " + id + " " + why);
      if (item && item->status == ReviewStatus::kEdited) {
        c.That(item->edited_text == m.edited, label + ": edited text");
      }
      pending += m.status == ReviewStatus::kPending;
      accepted += m.status == ReviewStatus::kAccepted;
      edited += m.status == ReviewStatus::kEdited;
      rejected += m.status == ReviewStatus::kRejected;
    }
    c.That(stats.pending == pending && stats.accepted == accepted &&
               stats.edited == edited && stats.rejected == rejected &&
               stats.total() == items.size(),
           label + ": stats");
    CheckExport(c, store, model.order, label);
  }
}

void CurationConcurrent(Check& c) {
  TempDir tmp;
  const auto items = QueueItems(1000, "c");
  CurationOptions options;
  options.lease_duration = std::chrono::minutes(10);
  CurationStore store(tmp / "queue.db", options);
  store.enqueue(items);

  std::mutex mu;
  std::set<std::string> held;
  std::map<std::string, std::pair<std::string, ReviewStatus>> decided;
  std::vector<std::string> violations;

  auto reviewer = [&](int n) {
    const std::string me = fmt::format("r{}", n);
    std::mt19937_64 rng(100 + n);
    while (auto leased = store.next_pending(me)) {
      const std::string id = leased->item.item_id;
      std::string stranger;
      {
        std::lock_guard lock(mu);
        if (!held.insert(id).second) {
          violations.push_back(me + " leased " + id + " held by another");
        }
        if (decided.contains(id)) {
          violations.push_back(me + " leased decided " + id);
        }
        if (rng() % 8 == 0) {
          for (const auto& other : held) {
            if (other != id) {
              stranger = other;
              break;
            }
          }
        }
      }
      if (!stranger.empty()) {
        try {
          store.submit_decision(stranger, me, Decision::kAccept);
          std::lock_guard lock(mu);
          violations.push_back(me + " decided " + stranger + " without lease");
        } catch (const CurationError& e) {
          if (e.code() != CurationError::Code::kConflict) {
            std::lock_guard lock(mu);
            violations.push_back("unexpected error code for " + stranger);
          }
        }
      }
      const auto decision = static_cast<Decision>(rng() % 3);
      std::optional<std::string> text;
      if (decision == Decision::kEdit) text = "edited " + id;
      const ReviewItem done = store.submit_decision(id, me, decision, text);
      std::lock_guard lock(mu);
      held.erase(id);
      decided[id] = {me, done.status};
    }
  };
  std::vector<std::thread> threads;
  for (int i = 0; i < 8; ++i) threads.emplace_back(reviewer, i);
  for (auto& t : threads) t.join();

  for (const auto& v : violations) c.That(false, v);
  c.That(decided.size() == items.size(),
         fmt::format("{} of {} items decided", decided.size(), items.size()));
  std::vector<std::string> order;
  for (const auto& item : items) {
    order.push_back(item.item_id);
    const auto got = store.get(item.item_id);
    std::string why;
    c.That(got && LegalHistory(*got, &why), item.item_id + " " + why);
    const auto it = decided.find(item.item_id);
    if (got && it != decided.end()) {
      c.That(got->status == it->second.second &&
                 got->history.back().reviewer == it->second.first,
             item.item_id + ": stored decision differs");
    }
  }
  const auto stats = store.stats();
  c.That(stats.pending == 0 && stats.leased == 0 &&
             stats.total() == items.size(),
         "stats after concurrent review");
  CheckExport(c, store, order, "concurrent");
}

// A child process reviews items and is killed mid-stream; everything it
// reported as committed must survive, and leases must not.
void CurationCrashRestart(Check& c) {
  TempDir tmp;
  const fs::path db = tmp / "queue.db";
  const auto items = QueueItems(300, "k");
  {
    CurationStore store(db);
    store.enqueue(items);
  }
  int fds[2];
  if (pipe(fds) != 0) {
    c.That(false, "pipe failed");
    return;
  }
  const pid_t child = fork();
  if (child == 0) {
    close(fds[0]);
    CurationStore store(db);
    int n = 0;
    while (auto leased = store.next_pending("crash")) {
      const std::string id = leased->item.item_id;
      const auto decision = static_cast<Decision>(n++ % 3);
      std::optional<std::string> text;
      if (decision == Decision::kEdit) text = "crash edit " + id;
      const auto done = store.submit_decision(id, "crash", decision, text);
      const std::string line =
          id + " " + std::string(ReviewStatusName(done.status)) + "\n";
      if (write(fds[1], line.data(), line.size()) < 0) _exit(1);
      // Leave one item leased but undecided before the kill lands.
      if (n == 120) {
        store.next_pending("crash");
        pause();
      }
    }
    _exit(0);
  }
  close(fds[1]);
  std::string reported;
  char buf[4096];
  std::size_t lines = 0;
  while (lines < 120) {
    const ssize_t got = read(fds[0], buf, sizeof buf);
    if (got <= 0) break;
    reported.append(buf, static_cast<std::size_t>(got));
    lines = static_cast<std::size_t>(
        std::count(reported.begin(), reported.end(), '\n'));
  }
  kill(child, SIGKILL);
  int status = 0;
  waitpid(child, &status, 0);
  close(fds[0]);
  c.That(lines == 120, fmt::format("child reported {} decisions", lines));

  CurationStore store(db);
  std::istringstream in(reported);
  std::set<std::string> committed;
  for (std::string id, st; in >> id >> st;) {
    committed.insert(id);
    const auto item = store.get(id);
    c.That(item && ReviewStatusName(item->status) == st,
           id + ": committed decision lost");
    if (item && item->status == ReviewStatus::kEdited) {
      c.That(item->edited_text == "crash edit " + id, id + ": edit lost");
    }
  }
  std::vector<std::string> order;
  std::size_t terminal = 0;
  for (const auto& item : items) {
    order.push_back(item.item_id);
    const auto got = store.get(item.item_id);
    std::string why;
    c.That(got && LegalHistory(*got, &why), item.item_id + " " + why);
    c.That(!store.lease_of(item.item_id), item.item_id + ": lease survived");
    if (got && IsTerminal(got->status)) ++terminal;
  }
  c.That(terminal == committed.size(),
         fmt::format("{} terminal items, {} reported", terminal,
                     committed.size()));
  const auto stats = store.stats();
  c.That(stats.total() == items.size() && stats.leased == 0,
         "stats after restart");
  // The item the child had leased is immediately available again.
  const auto next = store.next_pending("after");
  c.That(next && next->item.item_id == items[committed.size()].item_id,
         "leased item not released by restart");
  CheckExport(c, store, order, "restart");
}

void Curation(Check& c) {
  CurationCrashRestart(c);
  CurationSequences(c);
  CurationConcurrent(c);
}

// ---------------------------------------------------------------------------

struct Criterion {
  const char* name;
  double budget_seconds;
  std::function<void(Check&)> run;
};

}  // namespace
}  // namespace bimath

int main() {
  using namespace bimath;
  const std::vector<Criterion> criteria = {
      {"curation_service", 60, Curation},
      {"elo_arithmetic", 1, EloArithmetic},
      {"bootstrap_determinism", 30, BootstrapDeterminism},
      {"token_metric", 10, TokenMetric},
      {"answer_verification", 1, AnswerVerification},
      {"harness_determinism", 10, HarnessDeterminism},
      {"msi_invariant", 10, MsiInvariant},
      {"datagen", 10, Datagen},
      {"contamination_scanner", 120, Contamination},
  };
  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    const auto start = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.That(false, std::string("exception: ") + e.what());
    }
    const double elapsed = Seconds(start);
    check.That(elapsed < criterion.budget_seconds,
               fmt::format("took {:.2f} s, budget {:.0f} s", elapsed,
                           criterion.budget_seconds));
    if (check.ok()) {
      fmt::print("PASS {} ({:.2f} s)\n", criterion.name, elapsed);
    } else {
      ++failed;
      fmt::print("FAIL {} ({:.2f} s): {}\n", criterion.name, elapsed,
                 check.Summary());
    }
    std::fflush(stdout);
  }
  fmt::print("{} of {} criteria passed\n", criteria.size() - failed,
             criteria.size());
  return failed == 0 ? 0 : 1;
}
