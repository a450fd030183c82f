// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Plain-text tables for run comparisons and arena results.

#ifndef BIMATH_REPORT_H_
#define BIMATH_REPORT_H_

#include <map>
#include <optional>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "bimath/arena.h"
#include "bimath/eval_harness.h"

namespace bimath {

// "+5.00" / "-1.25" / "0.00".
std::string SignedDelta(double delta);

// One row per run with two-decimal percentages; rows after the baseline
// carry the bracketed delta, e.g. "21.00 (+5.00)". A final row holds the
// mean deltas.
std::string render_report(const DeltaTable& table);
nlohmann::json DeltaTableJson(const DeltaTable& table);

struct ArenaRow {
  std::string name;
  std::optional<double> accuracy;
  RatingInterval elo;
  double token_consumption = 0.0;
  std::optional<double> win_rate;
};

std::string RenderArena(std::span<const ArenaRow> rows);
nlohmann::json ArenaJson(std::span<const ArenaRow> rows);

}  // namespace bimath

#endif  // BIMATH_REPORT_H_
