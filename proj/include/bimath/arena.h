// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Pairwise judge comparisons, Elo ratings with bootstrap intervals, win
// rates and weighted token consumption.

#ifndef BIMATH_ARENA_H_
#define BIMATH_ARENA_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bimath/core_model.h"
#include "bimath/llm_gateway.h"
#include "bimath/prompt_library.h"

namespace bimath {

enum class MatchVerdict { kWinA, kWinB, kInconclusive };
std::string_view MatchVerdictName(MatchVerdict v);

struct MatchResult {
  std::string question_id;
  std::string contestant_a;
  std::string contestant_b;
  bool swap_applied = false;
  // Always in terms of contestant_a / contestant_b, swap already undone.
  MatchVerdict verdict = MatchVerdict::kInconclusive;
  std::string judge_raw;
  std::string error;

  friend bool operator==(const MatchResult&, const MatchResult&) = default;
};

void to_json(nlohmann::json& j, const MatchResult& m);
void from_json(const nlohmann::json& j, MatchResult& m);

inline constexpr double kDefaultK = 4.0;
inline constexpr double kDefaultInitialRating = 1000.0;

double expected_score(double r_a, double r_b);
// r + k * (s - e).
double update_rating(double r, double s, double e, double k);

using Ratings = std::map<std::string, double>;

// Sequential Elo over `matches` in the given order. Inconclusive matches are
// skipped. Every contestant named in a conclusive match starts at
// `initial`.
Ratings ReplayElo(std::span<const MatchResult> matches, double k,
                  double initial);

struct RatingInterval {
  double median = 0.0;
  double lower = 0.0;  // 2.5th percentile
  double upper = 0.0;  // 97.5th percentile
};

struct EloResult {
  std::map<std::string, RatingInterval> ratings;
  // Final ratings of each bootstrap iteration, in iteration order.
  std::vector<Ratings> iterations;
};

// Each iteration draws n conclusive matches with replacement from a
// generator seeded by (rng_seed, iteration), replays them in draw order and
// records the final ratings. Throws std::invalid_argument when there is no
// conclusive match or bootstrap_iters < 1.
EloResult compute_elo(std::span<const MatchResult> matches, double k,
                      double initial, int bootstrap_iters,
                      std::uint64_t rng_seed);

// The match indices iteration `iter` replays; exposed so the resampling can
// be checked independently.
std::vector<std::size_t> BootstrapIndices(std::size_t n, int iter,
                                          std::uint64_t rng_seed);

// Linear-interpolated percentile, p in [0, 1].
double Percentile(std::vector<double> values, double p);

// 100 * wins / conclusive. Throws std::invalid_argument with no conclusive
// match involving the contestant.
double win_rate(std::span<const MatchResult> matches,
                std::string_view contestant);

// Mean of (input + 3 * output). Throws std::invalid_argument when empty.
double token_consumption(std::span<const TokenUsage> ledger);

// Verdict in judge-slot terms: the last "[[A]]" or "[[B]]" wins.
MatchVerdict ParseJudgeVerdict(std::string_view judge_output);

struct ContestantAnswer {
  std::string question;
  std::string answer;
  TokenUsage usage;
};

struct Contestant {
  std::string name;
  std::map<std::string, ContestantAnswer> answers;  // by question id
  // Accuracy carried over from an eval run, when loaded from one.
  std::optional<double> accuracy;

  std::vector<TokenUsage> ledger() const;
};

// Loads either an eval run directory (questions taken from `dataset`, the
// answer being the last step's output) or a JSONL file of
// {question_id, question, answer, input_tokens, output_tokens}.
Contestant LoadContestant(const std::filesystem::path& path,
                          std::string name,
                          std::span<const BilingualProblem> dataset = {});

struct ArenaOptions {
  std::uint64_t seed = 0;
  std::string judge_model = "default";
  SamplingConfig sampling;
  const PromptLibrary* prompts = nullptr;
};

// One judged match per question id both contestants answered. Slot order
// is drawn from `seed`; judge failures become inconclusive with a note.
// Throws std::invalid_argument when the question sets differ.
std::vector<MatchResult> run_matches(const Contestant& a, const Contestant& b,
                                     Gateway& judge,
                                     const ArenaOptions& options = {});

}  // namespace bimath

#endif  // BIMATH_ARENA_H_
