// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/eval_harness.h"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "bimath/errors.h"
#include "bimath/parallel.h"

namespace bimath {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

std::string Trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void to_json(json& j, const RunManifest& m) {
  j = json{{"mode", ModeNameString(m.mode)},
           {"sampling", m.sampling},
           {"backend_id", m.backend_id},
           {"model_id", m.model_id},
           {"dataset_hash", m.dataset_hash},
           {"item_count", m.item_count},
           {"timestamp", m.timestamp}};
}

void from_json(const json& j, RunManifest& m) {
  m.mode = mode_for(j.at("mode").get<std::string>()).name;
  m.sampling = j.at("sampling").get<SamplingConfig>();
  m.backend_id = j.at("backend_id").get<std::string>();
  m.model_id = j.value("model_id", std::string());
  m.dataset_hash = j.at("dataset_hash").get<std::string>();
  m.item_count = j.at("item_count").get<std::size_t>();
  m.timestamp = j.value("timestamp", std::string());
}

double RunReport::token_consumption() const {
  std::map<std::string, TokenUsage> per_item;
  for (const auto& r : records) per_item[r.problem_id] += r.usage;
  if (per_item.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [id, u] : per_item) {
    sum += static_cast<double>(u.input_tokens) +
           3.0 * static_cast<double>(u.output_tokens);
  }
  return sum / static_cast<double>(per_item.size());
}

namespace internal {

const PromptLibrary& PromptsOf(const EvalOptions& options) {
  return options.prompts ? *options.prompts : PromptLibrary::Default();
}

std::string NowUtc() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

InferenceRecord SolveStep(Gateway& gateway, const EvalOptions& options,
                          const BilingualProblem& problem, ModeName mode,
                          int step_index, Language reasoning,
                          const std::string& question,
                          const SamplingConfig& sampling) {
  const TemplateId id = reasoning == Language::kKo ? TemplateId::kSolveKo
                                                   : TemplateId::kSolveEn;
  InferenceRecord record;
  record.problem_id = problem.id;
  record.subset = problem.subset;
  record.mode = mode;
  record.step_index = step_index;
  record.scored = true;
  ChatRequest request;
  request.model_id = options.model_id;
  request.messages =
      PromptsOf(options).render_messages(id, {{"question", question}});
  request.sampling = sampling;
  record.prompt_text = FlattenMessages(request.messages);
  try {
    ChatResponse response = gateway.complete(request);
    record.raw_output = std::move(response.text);
    record.usage = response.usage;
    record.verdict =
        judge_output(record.raw_output, problem.answer, &record.extracted);
  } catch (const BackendError& e) {
    record.verdict = Verdict::kUnparseable;
    record.error = e.what();
  }
  return record;
}

InferenceRecord TranslateStep(Gateway& gateway, const EvalOptions& options,
                              const BilingualProblem& problem, ModeName mode,
                              int step_index, TemplateId id,
                              const std::string& input,
                              const SamplingConfig& sampling) {
  InferenceRecord record;
  record.problem_id = problem.id;
  record.subset = problem.subset;
  record.mode = mode;
  record.step_index = step_index;
  ChatRequest request;
  request.model_id = options.model_id;
  request.messages =
      PromptsOf(options).render_messages(id, {{"question", input}});
  request.sampling = sampling;
  record.prompt_text = FlattenMessages(request.messages);
  try {
    ChatResponse response = gateway.complete(request);
    record.raw_output = std::move(response.text);
    record.usage = response.usage;
  } catch (const BackendError& e) {
    record.error = e.what();
  }
  return record;
}

RunReport Assemble(std::span<const BilingualProblem> dataset, ModeName mode,
                   const Gateway& gateway, const SamplingConfig& sampling,
                   const EvalOptions& options,
                   std::vector<InferenceRecord> records) {
  RunReport report;
  report.manifest.mode = mode;
  report.manifest.sampling = sampling;
  report.manifest.backend_id = gateway.backend_id();
  report.manifest.model_id = options.model_id;
  report.manifest.dataset_hash = DatasetHash(dataset);
  report.manifest.item_count = dataset.size();
  report.manifest.timestamp =
      options.timestamp.empty() ? NowUtc() : options.timestamp;
  std::stable_sort(records.begin(), records.end(),
                   [](const InferenceRecord& a, const InferenceRecord& b) {
                     if (a.problem_id != b.problem_id) {
                       return a.problem_id < b.problem_id;
                     }
                     return a.step_index < b.step_index;
                   });
  for (const auto& r : records) report.ledger += r.usage;
  report.records = std::move(records);
  report.accuracy = accuracy(report.records);
  return report;
}

}  // namespace internal

namespace {

void CheckDataset(std::span<const BilingualProblem> dataset,
                  const SamplingConfig& sampling) {
  if (dataset.empty()) throw ValidationError("dataset is empty");
  sampling.Validate();
}

}  // namespace

RunReport run_eval(std::span<const BilingualProblem> dataset,
                   const PromptingMode& mode, Gateway& gateway,
                   const SamplingConfig& sampling,
                   const EvalOptions& options) {
  if (!mode.single_pass() || mode.steps.front() != PipelineStep::kSolve) {
    throw std::invalid_argument(std::string(ModeNameString(mode.name)) +
                                " is not a single-pass mode");
  }
  CheckDataset(dataset, sampling);
  std::vector<InferenceRecord> records(dataset.size());
  ParallelFor(dataset.size(), gateway.concurrency(), [&](std::size_t i) {
    const auto& problem = dataset[i];
    records[i] = internal::SolveStep(gateway, options, problem, mode.name, 0,
                                     mode.reasoning_language,
                                     problem.question(mode.input_language),
                                     sampling);
  });
  return internal::Assemble(dataset, mode.name, gateway, sampling, options,
                            std::move(records));
}

RunReport run_te2e(std::span<const BilingualProblem> dataset,
                   Gateway& gateway, const SamplingConfig& sampling,
                   const EvalOptions& options) {
  CheckDataset(dataset, sampling);
  std::vector<std::vector<InferenceRecord>> per_item(dataset.size());
  ParallelFor(dataset.size(), gateway.concurrency(), [&](std::size_t i) {
    const auto& problem = dataset[i];
    auto& out = per_item[i];
    InferenceRecord translated = internal::TranslateStep(
        gateway, options, problem, ModeName::kTE2E, 0,
        TemplateId::kTeTranslate, problem.question_ko, sampling);
    const std::string english = Trimmed(translated.raw_output);
    if (!translated.error.empty() || english.empty()) {
      if (translated.error.empty()) translated.error = "empty translation";
      translated.scored = true;
      translated.verdict = Verdict::kUnparseable;
      out.push_back(std::move(translated));
      return;
    }
    out.push_back(std::move(translated));
    out.push_back(internal::SolveStep(gateway, options, problem,
                                      ModeName::kTE2E, 1, Language::kEn,
                                      english, sampling));
  });
  std::vector<InferenceRecord> records;
  for (auto& item : per_item) {
    for (auto& r : item) records.push_back(std::move(r));
  }
  return internal::Assemble(dataset, ModeName::kTE2E, gateway, sampling,
                            options, std::move(records));
}

DeltaTable compare_runs(std::span<const RunReport> reports,
                        std::span<const std::string> labels) {
  if (reports.empty()) {
    throw std::invalid_argument("compare_runs needs at least one report");
  }
  if (!labels.empty() && labels.size() != reports.size()) {
    throw std::invalid_argument("one label per report expected");
  }
  const std::string& hash = reports.front().manifest.dataset_hash;
  for (const auto& r : reports) {
    if (r.manifest.dataset_hash != hash) {
      throw ValidationError("dataset hash mismatch: " + hash + " vs " +
                            r.manifest.dataset_hash);
    }
  }

  DeltaTable table;
  for (const auto& column : ReportColumnOrder()) {
    for (const auto& r : reports) {
      if (r.accuracy.by_column.contains(column)) {
        table.columns.push_back(column);
        break;
      }
    }
  }
  auto label_of = [&](std::size_t i) {
    if (!labels.empty()) return labels[i];
    const auto& m = reports[i].manifest;
    return m.model_id + " " + std::string(ModeNameString(m.mode));
  };
  auto row_of = [&](std::size_t i) {
    DeltaRow row;
    row.label = label_of(i);
    row.average = reports[i].accuracy.average;
    for (const auto& column : table.columns) {
      const auto& by = reports[i].accuracy.by_column;
      auto it = by.find(column);
      row.values.push_back(it == by.end() ? std::nullopt
                                          : std::optional(it->second.percent()));
    }
    return row;
  };

  table.baseline = row_of(0);
  table.baseline.deltas.assign(table.columns.size(), 0.0);
  table.mean_deltas.assign(table.columns.size(), std::nullopt);
  std::vector<std::size_t> counts(table.columns.size(), 0);
  std::vector<double> sums(table.columns.size(), 0.0);
  double average_sum = 0.0;
  for (std::size_t i = 1; i < reports.size(); ++i) {
    DeltaRow row = row_of(i);
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      if (row.values[c] && table.baseline.values[c]) {
        const double d = *row.values[c] - *table.baseline.values[c];
        row.deltas.push_back(d);
        sums[c] += d;
        ++counts[c];
      } else {
        row.deltas.push_back(std::nullopt);
      }
    }
    row.average_delta = row.average - table.baseline.average;
    average_sum += row.average_delta;
    table.rows.push_back(std::move(row));
  }
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    if (counts[c] > 0) table.mean_deltas[c] = sums[c] / counts[c];
  }
  if (!table.rows.empty()) {
    table.mean_average_delta = average_sum / table.rows.size();
  }
  return table;
}

std::string SummaryText(const RunReport& report) {
  const auto& m = report.manifest;
  std::string out = fmt::format("mode {}  model {}  backend {}\n",
                                ModeNameString(m.mode), m.model_id,
                                m.backend_id);
  out += fmt::format("items {}  dataset {}\n\n", m.item_count,
                     m.dataset_hash.substr(0, 16));
  out += fmt::format("{:<10} {:>8} {:>8} {:>9}\n", "column", "correct",
                     "total", "accuracy");
  for (const auto& column : report.accuracy.columns()) {
    const auto& cell = report.accuracy.by_column.at(column);
    out += fmt::format("{:<10} {:>8} {:>8} {:>9.2f}\n", column, cell.correct,
                       cell.total, cell.percent());
  }
  out += fmt::format("{:<10} {:>8} {:>8} {:>9.2f}\n\n", "Avg.", "", "",
                     report.accuracy.average);
  out += fmt::format("tokens in {}  out {}  consumption {:.2f}\n",
                     report.ledger.input_tokens, report.ledger.output_tokens,
                     report.token_consumption());
  return out;
}

json SummaryJson(const RunReport& report) {
  json columns = json::object();
  for (const auto& [column, cell] : report.accuracy.by_column) {
    columns[column] = {{"correct", cell.correct},
                       {"total", cell.total},
                       {"percent", cell.percent()}};
  }
  return json{{"mode", ModeNameString(report.manifest.mode)},
              {"accuracy", columns},
              {"average", report.accuracy.average},
              {"tokens",
               {{"input", report.ledger.input_tokens},
                {"output", report.ledger.output_tokens},
                {"consumption", report.token_consumption()}}}};
}

void SaveRun(const RunReport& report, const fs::path& dir) {
  fs::create_directories(dir);
  WriteFile(dir / "manifest.json", json(report.manifest).dump(2) + "\n");
  std::string lines;
  for (const auto& r : report.records) lines += json(r).dump() + "\n";
  WriteFile(dir / "records.jsonl", lines);
  WriteFile(dir / "summary.txt", SummaryText(report));
  WriteFile(dir / "summary.json", SummaryJson(report).dump(2) + "\n");
}

RunReport LoadRun(const fs::path& dir) {
  RunReport report;
  try {
    report.manifest = json::parse(ReadFile(dir / "manifest.json"))
                          .get<RunManifest>();
  } catch (const json::exception& e) {
    throw ValidationError("bad manifest in " + dir.string() + ": " + e.what());
  }
  std::istringstream lines(ReadFile(dir / "records.jsonl"));
  std::string line;
  std::size_t number = 0;
  while (std::getline(lines, line)) {
    ++number;
    if (Trimmed(line).empty()) continue;
    try {
      report.records.push_back(json::parse(line).get<InferenceRecord>());
    } catch (const json::exception& e) {
      throw ValidationError(fmt::format("{}:{}: {}",
                                        (dir / "records.jsonl").string(),
                                        number, e.what()));
    }
  }
  for (const auto& r : report.records) report.ledger += r.usage;
  report.accuracy = accuracy(report.records);
  return report;
}

}  // namespace bimath
