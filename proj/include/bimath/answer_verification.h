// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Final-answer extraction from chain-of-thought output, numeric
// normalization, correctness judgement and accuracy aggregation.
//
// Matching is exact: numeric answers compare as rationals with no
// tolerance, so a non-terminating decimal such as "0.333" does not match
// 1/3. There is no symbolic equivalence ("2\sqrt{2}" vs "\sqrt{8}").

#ifndef BIMATH_ANSWER_VERIFICATION_H_
#define BIMATH_ANSWER_VERIFICATION_H_

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "bimath/core_model.h"

namespace bimath {

// Argument of the last `\boxed{...}` in `output`, matched with balanced
// braces (`\{` and `\}` are literal). nullopt when there is no marker or
// the last marker is never closed.
std::optional<std::string> find_boxed_span(std::string_view output);

// Classifies the last boxed span. kind is kUnparseable when there is no
// span or its content is neither a number nor a choice letter.
ExtractedAnswer extract_boxed(std::string_view output);

// Accepts signs, integers, terminating decimals, thousands separators,
// \frac / \dfrac / \tfrac (nestable), a/b, mixed numbers, a \times 10^{k},
// and strips math delimiters, currency, %, degrees, trailing \text{} units
// and a leading "x =". nullopt when the text is not such a number.
std::optional<Rational> normalize_numeric(std::string_view raw);

// Choice letter A-D from forms like "B", "(B)", "B)", "B. text", "\text{B}".
std::optional<char> normalize_choice(std::string_view raw);

Verdict judge_correct(const ExtractedAnswer& extracted, const GoldAnswer& gold);

// Verdict for a raw model output: kUnparseable when no boxed span exists.
Verdict judge_output(std::string_view output, const GoldAnswer& gold,
                     std::optional<ExtractedAnswer>* extracted = nullptr);

struct SubsetAccuracy {
  std::size_t correct = 0;
  std::size_t total = 0;
  double percent() const {
    return total == 0 ? 0.0 : 100.0 * static_cast<double>(correct) /
                                  static_cast<double>(total);
  }
  friend bool operator==(const SubsetAccuracy&,
                         const SubsetAccuracy&) = default;
};

struct AccuracyTable {
  // Keyed by report column (GSM8K, MATH, Omni-MATH, MMMLU, KSM, custom).
  std::map<std::string, SubsetAccuracy> by_column;
  // Unweighted mean of the per-column percentages.
  double average = 0.0;

  // Present columns in canonical order.
  std::vector<std::string> columns() const;
  friend bool operator==(const AccuracyTable&, const AccuracyTable&) = default;
};

// Aggregates the scored records. Throws std::invalid_argument when there
// are none.
AccuracyTable accuracy(std::span<const InferenceRecord> records);

}  // namespace bimath

#endif  // BIMATH_ANSWER_VERIFICATION_H_
