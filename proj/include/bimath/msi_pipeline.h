// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Three-step prompting: translate the Korean question to English, solve in
// English, translate the English solution back to Korean. The verdict comes
// from the English solution; the Korean text is a presentation artifact.

#ifndef BIMATH_MSI_PIPELINE_H_
#define BIMATH_MSI_PIPELINE_H_

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bimath/eval_harness.h"

namespace bimath {

struct MsiTrace {
  std::string problem_id;
  // Translation, English solution, Korean solution. Shorter when a step
  // failed; the failed step is not included.
  std::vector<std::string> step_outputs;
  std::vector<TokenUsage> per_step_usage;  // one per attempted step
  Verdict final_verdict = Verdict::kUnparseable;
  std::string error;

  TokenUsage total_usage() const;
  friend bool operator==(const MsiTrace&, const MsiTrace&) = default;
};

void to_json(nlohmann::json& j, const MsiTrace& t);
void from_json(const nlohmann::json& j, MsiTrace& t);

struct MsiRun {
  RunReport report;
  std::vector<MsiTrace> traces;  // sorted by problem id
};

MsiRun run_msi(std::span<const BilingualProblem> dataset, Gateway& gateway,
               const SamplingConfig& sampling,
               const EvalOptions& options = {});

struct MsiComparison {
  double msi_accuracy = 0.0;
  double single_accuracy = 0.0;
  double msi_tokens = 0.0;     // token consumption
  double single_tokens = 0.0;
  double ratio = 0.0;          // single / msi
};

// Throws ValidationError on a dataset mismatch and std::invalid_argument
// when the MSI consumption is zero.
MsiComparison compare_msi_vs_single(const RunReport& msi,
                                    const RunReport& single);

// Same arithmetic on bare consumption figures.
double TokenRatio(double single_tokens, double msi_tokens);

void SaveTraces(std::span<const MsiTrace> traces,
                const std::filesystem::path& dir);
std::vector<MsiTrace> LoadTraces(const std::filesystem::path& dir);

}  // namespace bimath

#endif  // BIMATH_MSI_PIPELINE_H_
