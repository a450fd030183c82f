// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/report.h"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace bimath {
namespace {

using json = nlohmann::json;

std::string Cell(const std::optional<double>& value,
                 const std::optional<double>& delta) {
  if (!value) return "-";
  std::string out = fmt::format("{:.2f}", *value);
  if (delta) out += " (" + SignedDelta(*delta) + ")";
  return out;
}

std::string RenderGrid(const std::vector<std::vector<std::string>>& grid) {
  std::vector<std::size_t> width;
  for (const auto& row : grid) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t c = 0; c < row.size(); ++c) {
      width[c] = std::max(width[c], row[c].size());
    }
  }
  std::string out;
  for (const auto& row : grid) {
    std::string line;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c == 0) {
        line += fmt::format("{:<{}}", row[c], width[c]);
      } else {
        line += fmt::format("  {:>{}}", row[c], width[c]);
      }
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out += line + "\n";
  }
  return out;
}

json OptionalJson(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

}  // namespace

std::string SignedDelta(double delta) {
  // Round first so -0.001 prints as 0.00, not -0.00.
  const double rounded = std::round(delta * 100.0) / 100.0;
  if (rounded == 0.0) return "0.00";
  return fmt::format("{:+.2f}", rounded);
}

std::string render_report(const DeltaTable& table) {
  std::vector<std::vector<std::string>> grid;
  std::vector<std::string> header{"Run"};
  for (const auto& c : table.columns) header.push_back(c);
  header.push_back("Avg.");
  grid.push_back(header);

  std::vector<std::string> base{table.baseline.label};
  for (const auto& v : table.baseline.values) base.push_back(Cell(v, {}));
  base.push_back(fmt::format("{:.2f}", table.baseline.average));
  grid.push_back(base);

  for (const auto& row : table.rows) {
    std::vector<std::string> line{row.label};
    for (std::size_t c = 0; c < row.values.size(); ++c) {
      line.push_back(Cell(row.values[c], row.deltas[c]));
    }
    line.push_back(Cell(row.average, row.average_delta));
    grid.push_back(line);
  }
  if (!table.rows.empty()) {
    std::vector<std::string> mean{"mean delta"};
    for (const auto& d : table.mean_deltas) {
      mean.push_back(d ? SignedDelta(*d) : "-");
    }
    mean.push_back(SignedDelta(table.mean_average_delta));
    grid.push_back(mean);
  }
  return RenderGrid(grid);
}

json DeltaTableJson(const DeltaTable& table) {
  auto row_json = [&](const DeltaRow& row) {
    json values = json::object();
    json deltas = json::object();
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      values[table.columns[c]] = OptionalJson(row.values[c]);
      deltas[table.columns[c]] =
          c < row.deltas.size() ? OptionalJson(row.deltas[c]) : json(nullptr);
    }
    return json{{"label", row.label},
                {"values", values},
                {"average", row.average},
                {"deltas", deltas},
                {"average_delta", row.average_delta}};
  };
  json rows = json::array();
  for (const auto& r : table.rows) rows.push_back(row_json(r));
  json mean = json::object();
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    mean[table.columns[c]] = OptionalJson(table.mean_deltas[c]);
  }
  return json{{"columns", table.columns},
              {"baseline", row_json(table.baseline)},
              {"rows", rows},
              {"mean_deltas", mean},
              {"mean_average_delta", table.mean_average_delta}};
}

std::string RenderArena(std::span<const ArenaRow> rows) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"Method", "Accuracy", "ELO", "95% CI", "Win rate",
                  "Tokens"});
  for (const auto& r : rows) {
    grid.push_back(
        {r.name, r.accuracy ? fmt::format("{:.2f}", *r.accuracy) : "-",
         fmt::format("{:.2f}", r.elo.median),
         fmt::format("[{:.2f}, {:.2f}]", r.elo.lower, r.elo.upper),
         r.win_rate ? fmt::format("{:.2f}", *r.win_rate) : "-",
         fmt::format("{:.0f}", r.token_consumption)});
  }
  return RenderGrid(grid);
}

json ArenaJson(std::span<const ArenaRow> rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"name", r.name},
                   {"accuracy", OptionalJson(r.accuracy)},
                   {"elo",
                    {{"median", r.elo.median},
                     {"lower", r.elo.lower},
                     {"upper", r.elo.upper}}},
                   {"win_rate", OptionalJson(r.win_rate)},
                   {"token_consumption", r.token_consumption}});
  }
  return out;
}

}  // namespace bimath
