// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Shared data model: benchmark items, prompting configurations, inference
// records and token usage. Every other module exchanges these types.

#ifndef BIMATH_CORE_MODEL_H_
#define BIMATH_CORE_MODEL_H_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "bimath/rational.h"

namespace bimath {

enum class Subset {
  kGsm8k,
  kMath,
  kOmniMath,
  kMmmlu,
  kKsmKmo,
  kKsmKjmo,
  kKsmCsat,
  kKsmKms,
  kKsmTq,
  kCustom,
};

std::string_view SubsetName(Subset subset);
std::optional<Subset> ParseSubset(std::string_view name);

// Column a subset is reported under. All KSM sources share one column.
std::string_view ReportColumn(Subset subset);

// Canonical left-to-right column order used by every accuracy table.
const std::vector<std::string>& ReportColumnOrder();

bool IsMultipleChoice(Subset subset);

enum class Language { kKo, kEn };
std::string_view LanguageName(Language lang);

enum class SourceDirection { kKoToEn, kEnToKo };

struct ChoiceAnswer {
  char label = 'A';  // one of A..D
  std::string text;  // option content

  friend bool operator==(const ChoiceAnswer&, const ChoiceAnswer&) = default;
};

struct GoldAnswer {
  std::variant<Rational, ChoiceAnswer> value;

  static GoldAnswer Numeric(Rational r) { return GoldAnswer{std::move(r)}; }
  static GoldAnswer Choice(char label, std::string text) {
    return GoldAnswer{ChoiceAnswer{label, std::move(text)}};
  }

  bool is_numeric() const { return std::holds_alternative<Rational>(value); }
  const Rational& numeric() const { return std::get<Rational>(value); }
  const ChoiceAnswer& choice() const { return std::get<ChoiceAnswer>(value); }

  friend bool operator==(const GoldAnswer&, const GoldAnswer&) = default;
};

struct BilingualProblem {
  std::string id;
  Subset subset = Subset::kCustom;
  std::string question_ko;
  std::string question_en;
  GoldAnswer answer;
  SourceDirection source_direction = SourceDirection::kEnToKo;

  const std::string& question(Language lang) const {
    return lang == Language::kKo ? question_ko : question_en;
  }

  friend bool operator==(const BilingualProblem&,
                         const BilingualProblem&) = default;
};

enum class ModeName { kK2K, kK2E, kE2E, kTE2E, kMSI };
std::string_view ModeNameString(ModeName name);

enum class PipelineStep {
  kTranslateQuestion,  // Korean question -> English (TE)
  kSolve,
  kTranslateSolution,  // English solution -> Korean (TE2E2K)
};

struct PromptingMode {
  ModeName name = ModeName::kK2K;
  Language input_language = Language::kKo;
  Language reasoning_language = Language::kKo;
  std::vector<PipelineStep> steps;

  bool single_pass() const { return steps.size() == 1; }
  friend bool operator==(const PromptingMode&, const PromptingMode&) = default;
};

// Case-insensitive lookup ("k2e", "K2E", "msi"). Throws std::invalid_argument
// for unknown names.
PromptingMode mode_for(std::string_view name);

struct SamplingConfig {
  double temperature = 0.7;
  double top_p = 0.95;
  int min_tokens = 8;
  int max_tokens = 2048;
  std::optional<std::uint64_t> seed;

  // Throws std::invalid_argument when a bound is violated.
  void Validate() const;
  friend bool operator==(const SamplingConfig&,
                         const SamplingConfig&) = default;
};

struct TokenUsage {
  std::uint64_t input_tokens = 0;
  std::uint64_t output_tokens = 0;

  TokenUsage& operator+=(const TokenUsage& o) {
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    return *this;
  }
  friend TokenUsage operator+(TokenUsage a, const TokenUsage& b) {
    return a += b;
  }
  friend bool operator==(const TokenUsage&, const TokenUsage&) = default;
};

enum class AnswerKind { kNumeric, kChoice, kUnparseable };

struct ExtractedAnswer {
  std::string raw_span;  // text inside the final boxed marker
  AnswerKind kind = AnswerKind::kUnparseable;
  std::optional<Rational> numeric;  // set iff kind == kNumeric
  std::optional<char> choice;       // set iff kind == kChoice

  friend bool operator==(const ExtractedAnswer&,
                         const ExtractedAnswer&) = default;
};

enum class Verdict { kCorrect, kIncorrect, kUnparseable };
std::string_view VerdictName(Verdict v);

struct InferenceRecord {
  std::string problem_id;
  Subset subset = Subset::kCustom;
  ModeName mode = ModeName::kK2K;
  int step_index = 0;
  std::string prompt_text;
  std::string raw_output;
  TokenUsage usage;
  // Absent when no boxed answer was found or the step is not a solve step.
  std::optional<ExtractedAnswer> extracted;
  Verdict verdict = Verdict::kUnparseable;
  // Exactly one record per problem carries the item's verdict.
  bool scored = false;
  std::string error;

  friend bool operator==(const InferenceRecord&,
                         const InferenceRecord&) = default;
};

// JSON mapping. Field names follow the type fields one-to-one.
void to_json(nlohmann::json& j, const GoldAnswer& a);
void from_json(const nlohmann::json& j, GoldAnswer& a);
void to_json(nlohmann::json& j, const BilingualProblem& p);
void from_json(const nlohmann::json& j, BilingualProblem& p);
void to_json(nlohmann::json& j, const SamplingConfig& s);
void from_json(const nlohmann::json& j, SamplingConfig& s);
void to_json(nlohmann::json& j, const TokenUsage& u);
void from_json(const nlohmann::json& j, TokenUsage& u);
void to_json(nlohmann::json& j, const ExtractedAnswer& a);
void from_json(const nlohmann::json& j, ExtractedAnswer& a);
void to_json(nlohmann::json& j, const InferenceRecord& r);
void from_json(const nlohmann::json& j, InferenceRecord& r);

// Reads a line-delimited dataset. Blank lines are ignored. Throws
// ValidationError naming the offending line on malformed input.
std::vector<BilingualProblem> LoadDataset(const std::filesystem::path& path);
std::vector<BilingualProblem> ParseDataset(std::string_view text);
std::string SerializeDataset(std::span<const BilingualProblem> items);
void SaveDataset(const std::filesystem::path& path,
                 std::span<const BilingualProblem> items);

// Content hash of the canonical serialization; identifies a dataset across
// run reports.
std::string DatasetHash(std::span<const BilingualProblem> items);

struct ValidationFinding {
  enum class Kind { kDuplicateId, kEmptyField, kKindMismatch, kBadChoice };
  Kind kind;
  std::string item_id;
  std::string message;
};

struct ValidationReport {
  std::vector<ValidationFinding> findings;
  bool ok() const { return findings.empty(); }
};

ValidationReport validate_dataset(std::span<const BilingualProblem> items);

}  // namespace bimath

#endif  // BIMATH_CORE_MODEL_H_
