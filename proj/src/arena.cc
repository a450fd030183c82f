// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/arena.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <stdexcept>
#include <thread>

#include "bimath/errors.h"
#include "bimath/eval_harness.h"
#include "bimath/parallel.h"

namespace bimath {
namespace {

using json = nlohmann::json;

void ApplyMatch(Ratings& ratings, const MatchResult& m, double k) {
  double& ra = ratings[m.contestant_a];
  double& rb = ratings[m.contestant_b];
  const double e_a = expected_score(ra, rb);
  const double s_a = m.verdict == MatchVerdict::kWinA ? 1.0 : 0.0;
  const double delta = update_rating(ra, s_a, e_a, k) - ra;
  ra += delta;
  rb -= delta;
}

std::vector<MatchResult> Conclusive(std::span<const MatchResult> matches) {
  std::vector<MatchResult> out;
  for (const auto& m : matches) {
    if (m.verdict != MatchVerdict::kInconclusive) out.push_back(m);
  }
  return out;
}

}  // namespace

std::string_view MatchVerdictName(MatchVerdict v) {
  switch (v) {
    case MatchVerdict::kWinA:
      return "win_a";
    case MatchVerdict::kWinB:
      return "win_b";
    case MatchVerdict::kInconclusive:
      return "inconclusive";
  }
  return "inconclusive";
}

void to_json(json& j, const MatchResult& m) {
  j = json{{"question_id", m.question_id},
           {"contestant_a", m.contestant_a},
           {"contestant_b", m.contestant_b},
           {"swap_applied", m.swap_applied},
           {"verdict", MatchVerdictName(m.verdict)},
           {"judge_raw", m.judge_raw}};
  if (!m.error.empty()) j["error"] = m.error;
}

void from_json(const json& j, MatchResult& m) {
  m.question_id = j.at("question_id").get<std::string>();
  m.contestant_a = j.at("contestant_a").get<std::string>();
  m.contestant_b = j.at("contestant_b").get<std::string>();
  m.swap_applied = j.value("swap_applied", false);
  const auto v = j.at("verdict").get<std::string>();
  if (v == "win_a") {
    m.verdict = MatchVerdict::kWinA;
  } else if (v == "win_b") {
    m.verdict = MatchVerdict::kWinB;
  } else if (v == "inconclusive") {
    m.verdict = MatchVerdict::kInconclusive;
  } else {
    throw ValidationError("unknown match verdict '" + v + "'");
  }
  m.judge_raw = j.value("judge_raw", std::string());
  m.error = j.value("error", std::string());
}

double expected_score(double r_a, double r_b) {
  return 1.0 / (1.0 + std::pow(10.0, (r_b - r_a) / 400.0));
}

double update_rating(double r, double s, double e, double k) {
  return r + k * (s - e);
}

Ratings ReplayElo(std::span<const MatchResult> matches, double k,
                  double initial) {
  Ratings ratings;
  for (const auto& m : matches) {
    if (m.verdict == MatchVerdict::kInconclusive) continue;
    ratings.emplace(m.contestant_a, initial);
    ratings.emplace(m.contestant_b, initial);
  }
  for (const auto& m : matches) {
    if (m.verdict != MatchVerdict::kInconclusive) ApplyMatch(ratings, m, k);
  }
  return ratings;
}

std::vector<std::size_t> BootstrapIndices(std::size_t n, int iter,
                                          std::uint64_t rng_seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(rng_seed),
                    static_cast<std::uint32_t>(rng_seed >> 32),
                    static_cast<std::uint32_t>(iter)};
  std::mt19937_64 gen(seq);
  std::vector<std::size_t> out(n);
  for (auto& index : out) index = static_cast<std::size_t>(gen() % n);
  return out;
}

double Percentile(std::vector<double> values, double p) {
  if (values.empty()) throw std::invalid_argument("percentile of nothing");
  std::sort(values.begin(), values.end());
  const double pos = p * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + (values[hi] - values[lo]) * frac;
}

EloResult compute_elo(std::span<const MatchResult> matches, double k,
                      double initial, int bootstrap_iters,
                      std::uint64_t rng_seed) {
  if (bootstrap_iters < 1) {
    throw std::invalid_argument("bootstrap_iters must be at least 1");
  }
  const std::vector<MatchResult> pool = Conclusive(matches);
  if (pool.empty()) {
    throw std::invalid_argument("no conclusive matches to rate");
  }
  std::set<std::string> names;
  for (const auto& m : pool) {
    names.insert(m.contestant_a);
    names.insert(m.contestant_b);
  }

  EloResult result;
  result.iterations.resize(static_cast<std::size_t>(bootstrap_iters));
  const int workers =
      static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  ParallelFor(result.iterations.size(), workers, [&](std::size_t iter) {
    Ratings ratings;
    for (const auto& name : names) ratings[name] = initial;
    for (std::size_t i :
         BootstrapIndices(pool.size(), static_cast<int>(iter), rng_seed)) {
      ApplyMatch(ratings, pool[i], k);
    }
    result.iterations[iter] = std::move(ratings);
  });

  for (const auto& name : names) {
    std::vector<double> finals;
    finals.reserve(result.iterations.size());
    for (const auto& r : result.iterations) finals.push_back(r.at(name));
    result.ratings[name] = {Percentile(finals, 0.5),
                            Percentile(finals, 0.025),
                            Percentile(finals, 0.975)};
  }
  return result;
}

double win_rate(std::span<const MatchResult> matches,
                std::string_view contestant) {
  std::size_t wins = 0;
  std::size_t conclusive = 0;
  for (const auto& m : matches) {
    if (m.verdict == MatchVerdict::kInconclusive) continue;
    const bool is_a = m.contestant_a == contestant;
    const bool is_b = m.contestant_b == contestant;
    if (!is_a && !is_b) continue;
    ++conclusive;
    if ((is_a && m.verdict == MatchVerdict::kWinA) ||
        (is_b && m.verdict == MatchVerdict::kWinB)) {
      ++wins;
    }
  }
  if (conclusive == 0) {
    throw std::invalid_argument("no conclusive matches for " +
                                std::string(contestant));
  }
  return 100.0 * static_cast<double>(wins) / static_cast<double>(conclusive);
}

double token_consumption(std::span<const TokenUsage> ledger) {
  if (ledger.empty()) throw std::invalid_argument("empty token ledger");
  double sum = 0.0;
  for (const auto& u : ledger) {
    sum += static_cast<double>(u.input_tokens) +
           3.0 * static_cast<double>(u.output_tokens);
  }
  return sum / static_cast<double>(ledger.size());
}

MatchVerdict ParseJudgeVerdict(std::string_view judge_output) {
  const auto a = judge_output.rfind("[[A]]");
  const auto b = judge_output.rfind("[[B]]");
  if (a == std::string_view::npos && b == std::string_view::npos) {
    return MatchVerdict::kInconclusive;
  }
  if (b == std::string_view::npos) return MatchVerdict::kWinA;
  if (a == std::string_view::npos) return MatchVerdict::kWinB;
  return a > b ? MatchVerdict::kWinA : MatchVerdict::kWinB;
}

std::vector<TokenUsage> Contestant::ledger() const {
  std::vector<TokenUsage> out;
  out.reserve(answers.size());
  for (const auto& [id, a] : answers) out.push_back(a.usage);
  return out;
}

Contestant LoadContestant(const std::filesystem::path& path, std::string name,
                          std::span<const BilingualProblem> dataset) {
  Contestant c;
  c.name = std::move(name);
  if (std::filesystem::is_directory(path)) {
    const RunReport run = LoadRun(path);
    std::map<std::string, const BilingualProblem*> by_id;
    for (const auto& p : dataset) by_id[p.id] = &p;
    for (const auto& r : run.records) {  // sorted by (id, step)
      auto& entry = c.answers[r.problem_id];
      entry.answer = r.raw_output;
      entry.usage += r.usage;
    }
    for (auto& [id, entry] : c.answers) {
      auto it = by_id.find(id);
      if (it == by_id.end()) {
        throw ValidationError("question " + id + " of " + path.string() +
                              " is not in the dataset");
      }
      entry.question = it->second->question_ko;
    }
    c.accuracy = run.accuracy.average;
    return c;
  }
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ContestantAnswer a;
      a.question = j.at("question").get<std::string>();
      a.answer = j.at("answer").get<std::string>();
      a.usage.input_tokens = j.value("input_tokens", std::uint64_t{0});
      a.usage.output_tokens = j.value("output_tokens", std::uint64_t{0});
      c.answers[j.at("question_id").get<std::string>()] = std::move(a);
    } catch (const json::exception& e) {
      throw ValidationError(path.string() + ":" + std::to_string(number) +
                            ": " + e.what());
    }
  }
  return c;
}

std::vector<MatchResult> run_matches(const Contestant& a, const Contestant& b,
                                     Gateway& judge,
                                     const ArenaOptions& options) {
  if (a.answers.size() != b.answers.size() ||
      !std::equal(a.answers.begin(), a.answers.end(), b.answers.begin(),
                  [](const auto& x, const auto& y) {
                    return x.first == y.first;
                  })) {
    throw std::invalid_argument("contestants answered different questions");
  }
  const PromptLibrary& prompts =
      options.prompts ? *options.prompts : PromptLibrary::Default();

  std::vector<MatchResult> out;
  std::mt19937_64 slot_rng(options.seed);
  for (const auto& [id, answer] : a.answers) {
    MatchResult m;
    m.question_id = id;
    m.contestant_a = a.name;
    m.contestant_b = b.name;
    m.swap_applied = (slot_rng() & 1) != 0;
    out.push_back(std::move(m));
  }

  ParallelFor(out.size(), judge.concurrency(), [&](std::size_t i) {
    MatchResult& m = out[i];
    const auto& qa = a.answers.at(m.question_id);
    const auto& qb = b.answers.at(m.question_id);
    ChatRequest request;
    request.model_id = options.judge_model;
    request.messages =
        prompts.judge_messages(qa.question, qa.answer, qb.answer,
                               m.swap_applied);
    request.sampling = options.sampling;
    try {
      m.judge_raw = judge.complete(request).text;
    } catch (const BackendError& e) {
      m.error = e.what();
      return;
    }
    const MatchVerdict slot = ParseJudgeVerdict(m.judge_raw);
    if (slot == MatchVerdict::kInconclusive || !m.swap_applied) {
      m.verdict = slot;
    } else {
      m.verdict = slot == MatchVerdict::kWinA ? MatchVerdict::kWinB
                                              : MatchVerdict::kWinA;
    }
  });
  return out;
}

}  // namespace bimath
