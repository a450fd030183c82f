// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Runs a dataset through a prompting mode and aggregates the verdicts.
//
// A run directory holds:
//   manifest.json   mode, sampling, backend, dataset hash, timestamp
//   records.jsonl   every InferenceRecord, sorted by (problem id, step)
//   summary.txt     accuracy table
//   summary.json    the same numbers, machine-readable
// The summaries are derived from the records and can be regenerated.

#ifndef BIMATH_EVAL_HARNESS_H_
#define BIMATH_EVAL_HARNESS_H_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bimath/answer_verification.h"
#include "bimath/core_model.h"
#include "bimath/llm_gateway.h"
#include "bimath/prompt_library.h"

namespace bimath {

struct RunManifest {
  ModeName mode = ModeName::kK2K;
  SamplingConfig sampling;
  std::string backend_id;
  std::string model_id;
  std::string dataset_hash;
  std::size_t item_count = 0;
  std::string timestamp;  // ISO-8601 UTC

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

struct RunReport {
  RunManifest manifest;
  std::vector<InferenceRecord> records;
  AccuracyTable accuracy;
  // Sum over every record, all steps included.
  TokenUsage ledger;

  // Mean over items of (input + 3 * output), steps of one item summed.
  double token_consumption() const;
};

struct EvalOptions {
  std::string model_id = "default";
  // Written to the manifest verbatim; empty means the current UTC time.
  std::string timestamp;
  // Defaults to PromptLibrary::Default().
  const PromptLibrary* prompts = nullptr;
};

// Single-pass modes (K2K, K2E, E2E). Backend failures are recorded per item
// as unparseable with the error text; the run itself completes.
RunReport run_eval(std::span<const BilingualProblem> dataset,
                   const PromptingMode& mode, Gateway& gateway,
                   const SamplingConfig& sampling,
                   const EvalOptions& options = {});

// Translate the Korean question with the few-shot TE prompt, then solve the
// translation in English. Two records per item, one if translation fails.
RunReport run_te2e(std::span<const BilingualProblem> dataset,
                   Gateway& gateway, const SamplingConfig& sampling,
                   const EvalOptions& options = {});

struct DeltaRow {
  std::string label;
  // Per report column; nullopt when the run lacks the column.
  std::vector<std::optional<double>> values;
  double average = 0.0;
  std::vector<std::optional<double>> deltas;  // against the baseline
  double average_delta = 0.0;
};

struct DeltaTable {
  std::vector<std::string> columns;
  DeltaRow baseline;
  std::vector<DeltaRow> rows;
  // Mean of each column's deltas over `rows`.
  std::vector<std::optional<double>> mean_deltas;
  double mean_average_delta = 0.0;
};

// First report is the baseline. Throws ValidationError when dataset hashes
// differ and std::invalid_argument when fewer than one report is given.
DeltaTable compare_runs(std::span<const RunReport> reports,
                        std::span<const std::string> labels = {});

// Persistence.
void SaveRun(const RunReport& report, const std::filesystem::path& dir);
// Reloads manifest and records and re-aggregates accuracy from records.
RunReport LoadRun(const std::filesystem::path& dir);

std::string SummaryText(const RunReport& report);
nlohmann::json SummaryJson(const RunReport& report);

// Building blocks shared with the multi-step pipeline.
namespace internal {

const PromptLibrary& PromptsOf(const EvalOptions& options);

// One solve call; the returned record is scored.
InferenceRecord SolveStep(Gateway& gateway, const EvalOptions& options,
                          const BilingualProblem& problem, ModeName mode,
                          int step_index, Language reasoning,
                          const std::string& question,
                          const SamplingConfig& sampling);

// One few-shot translation call (TE or TE2E2K). Unscored; on failure the
// record carries the error and an empty output.
InferenceRecord TranslateStep(Gateway& gateway, const EvalOptions& options,
                              const BilingualProblem& problem, ModeName mode,
                              int step_index, TemplateId id,
                              const std::string& input,
                              const SamplingConfig& sampling);

RunReport Assemble(std::span<const BilingualProblem> dataset, ModeName mode,
                   const Gateway& gateway, const SamplingConfig& sampling,
                   const EvalOptions& options,
                   std::vector<InferenceRecord> records);

std::string NowUtc();

}  // namespace internal
}  // namespace bimath

#endif  // BIMATH_EVAL_HARNESS_H_
