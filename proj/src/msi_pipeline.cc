// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/msi_pipeline.h"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "bimath/errors.h"
#include "bimath/parallel.h"

namespace bimath {
namespace {

using json = nlohmann::json;

std::string Trimmed(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

}  // namespace

TokenUsage MsiTrace::total_usage() const {
  TokenUsage total;
  for (const auto& u : per_step_usage) total += u;
  return total;
}

void to_json(json& j, const MsiTrace& t) {
  j = json{{"problem_id", t.problem_id},
           {"step_outputs", t.step_outputs},
           {"per_step_usage", t.per_step_usage},
           {"final_verdict", VerdictName(t.final_verdict)}};
  if (!t.error.empty()) j["error"] = t.error;
}

void from_json(const json& j, MsiTrace& t) {
  t.problem_id = j.at("problem_id").get<std::string>();
  t.step_outputs = j.at("step_outputs").get<std::vector<std::string>>();
  t.per_step_usage = j.at("per_step_usage").get<std::vector<TokenUsage>>();
  const auto v = j.at("final_verdict").get<std::string>();
  t.final_verdict = v == "correct"     ? Verdict::kCorrect
                    : v == "incorrect" ? Verdict::kIncorrect
                                       : Verdict::kUnparseable;
  t.error = j.value("error", std::string());
}

MsiRun run_msi(std::span<const BilingualProblem> dataset, Gateway& gateway,
               const SamplingConfig& sampling, const EvalOptions& options) {
  if (dataset.empty()) throw ValidationError("dataset is empty");
  sampling.Validate();
  std::vector<std::vector<InferenceRecord>> per_item(dataset.size());
  std::vector<MsiTrace> traces(dataset.size());

  ParallelFor(dataset.size(), gateway.concurrency(), [&](std::size_t i) {
    const auto& problem = dataset[i];
    auto& records = per_item[i];
    auto& trace = traces[i];
    trace.problem_id = problem.id;

    InferenceRecord te = internal::TranslateStep(
        gateway, options, problem, ModeName::kMSI, 0,
        TemplateId::kTeTranslate, problem.question_ko, sampling);
    trace.per_step_usage.push_back(te.usage);
    const std::string english = Trimmed(te.raw_output);
    if (!te.error.empty() || english.empty()) {
      if (te.error.empty()) te.error = "empty translation";
      te.scored = true;
      trace.error = te.error;
      records.push_back(std::move(te));
      return;
    }
    trace.step_outputs.push_back(te.raw_output);
    records.push_back(std::move(te));

    InferenceRecord solve = internal::SolveStep(
        gateway, options, problem, ModeName::kMSI, 1, Language::kEn, english,
        sampling);
    trace.per_step_usage.push_back(solve.usage);
    trace.final_verdict = solve.verdict;
    if (!solve.error.empty()) {
      trace.error = solve.error;
      records.push_back(std::move(solve));
      return;
    }
    trace.step_outputs.push_back(solve.raw_output);
    const std::string solution = solve.raw_output;
    records.push_back(std::move(solve));

    // The back-translation never feeds the verdict.
    InferenceRecord back = internal::TranslateStep(
        gateway, options, problem, ModeName::kMSI, 2,
        TemplateId::kTe2e2kTranslate, solution, sampling);
    trace.per_step_usage.push_back(back.usage);
    if (!back.error.empty()) {
      trace.error = back.error;
    } else {
      trace.step_outputs.push_back(back.raw_output);
    }
    records.push_back(std::move(back));
  });

  std::vector<InferenceRecord> records;
  for (auto& item : per_item) {
    for (auto& r : item) records.push_back(std::move(r));
  }
  MsiRun run;
  run.report = internal::Assemble(dataset, ModeName::kMSI, gateway, sampling,
                                  options, std::move(records));
  std::stable_sort(traces.begin(), traces.end(),
                   [](const MsiTrace& a, const MsiTrace& b) {
                     return a.problem_id < b.problem_id;
                   });
  run.traces = std::move(traces);
  return run;
}

double TokenRatio(double single_tokens, double msi_tokens) {
  if (msi_tokens <= 0.0) {
    throw std::invalid_argument("MSI token consumption must be positive");
  }
  return single_tokens / msi_tokens;
}

MsiComparison compare_msi_vs_single(const RunReport& msi,
                                    const RunReport& single) {
  if (msi.manifest.dataset_hash != single.manifest.dataset_hash) {
    throw ValidationError("dataset hash mismatch between MSI and single run");
  }
  MsiComparison out;
  out.msi_accuracy = msi.accuracy.average;
  out.single_accuracy = single.accuracy.average;
  out.msi_tokens = msi.token_consumption();
  out.single_tokens = single.token_consumption();
  out.ratio = TokenRatio(out.single_tokens, out.msi_tokens);
  return out;
}

void SaveTraces(std::span<const MsiTrace> traces,
                const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "traces.jsonl", std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write traces in " + dir.string());
  for (const auto& t : traces) out << json(t).dump() << '\n';
}

std::vector<MsiTrace> LoadTraces(const std::filesystem::path& dir) {
  std::ifstream in(dir / "traces.jsonl");
  if (!in) throw ValidationError("no traces in " + dir.string());
  std::vector<MsiTrace> out;
  std::string line;
  while (std::getline(in, line)) {
    if (Trimmed(line).empty()) continue;
    try {
      out.push_back(json::parse(line).get<MsiTrace>());
    } catch (const json::exception& e) {
      throw ValidationError("bad trace line: " + std::string(e.what()));
    }
  }
  return out;
}

}  // namespace bimath
