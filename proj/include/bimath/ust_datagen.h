// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Staged training-data generation: translate seed questions to Korean,
// score and filter with a reward model, generate an English understanding
// stage and a Korean solution, and emit one training string per example:
//
//   question_ko <sep1> understanding_en <sep2> solution_en <sep3> solution_ko
//
// Output directory: train.jsonl, discards.jsonl, manifest.json.

#ifndef BIMATH_UST_DATAGEN_H_
#define BIMATH_UST_DATAGEN_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bimath/llm_gateway.h"
#include "bimath/prompt_library.h"

namespace bimath {

enum class SeedOrigin { kOpenmathLike, kNuminaLike, kCustom };

struct SeedSample {
  std::string id;
  std::string question_en;
  std::string solution_en;  // gold chain of thought
  SeedOrigin origin = SeedOrigin::kCustom;
};

// JSONL with question_en, solution_en and optional id / origin. Missing ids
// become "seed-<line>". Throws ValidationError on malformed or empty fields.
std::vector<SeedSample> LoadSeeds(const std::filesystem::path& path);

// Uniform sample of `n` seeds (all of them when n >= size), order kept.
std::vector<SeedSample> ReservoirSample(std::span<const SeedSample> seeds,
                                        std::size_t n, std::uint64_t seed);

struct KoreanPair {
  SeedSample seed;
  std::string question_ko;
  std::optional<double> rm_score;
};

struct StagedTrainingExample {
  std::string id;
  std::string question_ko;
  std::string understanding_en;
  std::string solution_en;
  std::string solution_ko;
  double rm_score = 0.0;
};

struct Separators {
  std::string understand = "<|understand|>";
  std::string solve = "<|solve|>";
  std::string translate = "<|translate|>";

  // Throws std::invalid_argument unless three distinct non-empty strings.
  void Validate() const;
};

// Which stages follow the question. Ablations drop some of them.
struct StageMask {
  bool understand = true;
  bool solve = true;
  bool translate = true;
};

enum class KeepSide { kHigh, kLow };

struct FilterPolicy {
  double high_threshold = 1.0;
  double low_threshold = 0.0;
  KeepSide keep = KeepSide::kHigh;
  std::optional<std::size_t> top_k;

  void Validate() const;
};

enum class SampleVerdict { kKeep, kDiscard };

// The last non-empty line, trimmed, must read KEEP or DISCARD; anything
// else is DISCARD.
SampleVerdict ParseSampleVerdict(std::string_view validator_output);

struct DatagenLogEntry {
  std::string seed_id;
  std::string stage;   // translate_question, score, understanding, ...
  std::string reason;
  bool skipped = false;  // backend failure rather than a content discard
};

void to_json(nlohmann::json& j, const DatagenLogEntry& e);

struct DatagenContext {
  Gateway& gateway;
  std::string model_id = "default";
  SamplingConfig sampling;
  const PromptLibrary* prompts = nullptr;
  // Collected in seed order by run_datagen; operations append here.
  std::vector<DatagenLogEntry>* log = nullptr;
};

SampleVerdict validate_sample(std::string_view task, std::string_view original,
                              std::string_view generated,
                              const DatagenContext& ctx);

std::vector<KoreanPair> translate_questions(std::span<const SeedSample> seeds,
                                            const DatagenContext& ctx);

std::vector<KoreanPair> score_and_filter(std::vector<KoreanPair> pairs,
                                         const FilterPolicy& policy,
                                         const DatagenContext& ctx);

// Threshold and top-k rule on precomputed scores; returns kept indices in
// input order.
std::vector<std::size_t> FilterScores(std::span<const double> scores,
                                      const FilterPolicy& policy);

// Throws BackendError on failure.
std::string generate_understanding(const KoreanPair& pair,
                                   const DatagenContext& ctx);

// nullopt (with a log entry) when the validator or the boxed-answer check
// rejects the translation. Throws BackendError on failure.
std::optional<std::string> generate_korean_solution(const KoreanPair& pair,
                                                    const DatagenContext& ctx);

struct TrainingConfig {
  std::string base_model = "Qwen2.5-7B-Instruct";
  int batch_size_per_gpu = 96;
  int gpus = 4;
  double learning_rate = 2e-5;
  std::string scheduler = "cosine";
  std::string optimizer = "AdamW";
  int max_length = 8192;
  int epochs = 3;
};

void to_json(nlohmann::json& j, const TrainingConfig& c);

std::string ComposeTrainingText(const StagedTrainingExample& example,
                                const Separators& separators,
                                const StageMask& mask = {});

// Splits a training string back into its segments, question first.
// Throws ValidationError when the separators are missing or out of order.
std::vector<std::string> ParseTrainingText(std::string_view text,
                                           const Separators& separators,
                                           const StageMask& mask = {});

struct EmitResult {
  std::size_t emitted = 0;
  std::vector<DatagenLogEntry> rejected;  // separator collisions
  std::string file_hash;                  // SHA-256 of train.jsonl
};

EmitResult emit_training_file(std::span<const StagedTrainingExample> examples,
                              const Separators& separators,
                              const std::filesystem::path& out_dir,
                              const StageMask& mask = {},
                              const TrainingConfig& config = {});

struct DatagenOptions {
  FilterPolicy policy;
  Separators separators;
  StageMask mask;
  TrainingConfig training;
  std::optional<std::size_t> sample_size;  // reservoir size
  std::uint64_t seed = 0;
  std::string model_id = "default";
  SamplingConfig sampling;
  const PromptLibrary* prompts = nullptr;
};

struct DatagenReport {
  std::size_t input = 0;
  std::size_t emitted = 0;
  std::size_t discarded = 0;
  std::size_t skipped = 0;
  std::vector<DatagenLogEntry> log;
  std::string file_hash;
};

// Full pipeline. Writes train.jsonl, discards.jsonl and manifest.json to
// `out_dir`; input = emitted + discarded + skipped.
DatagenReport run_datagen(std::span<const SeedSample> seeds, Gateway& gateway,
                          const DatagenOptions& options,
                          const std::filesystem::path& out_dir);

}  // namespace bimath

#endif  // BIMATH_UST_DATAGEN_H_
