// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/ust_datagen.h"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "bimath/answer_verification.h"
#include "bimath/errors.h"
#include "bimath/hashing.h"
#include "bimath/parallel.h"

namespace bimath {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::string_view kTaskQuestion =
    "Translate the English math question into Korean.";
constexpr std::string_view kTaskSolution =
    "Translate the English solution into Korean, keeping every formula and "
    "the boxed final answer unchanged.";

std::string_view Trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

const PromptLibrary& Prompts(const DatagenContext& ctx) {
  return ctx.prompts ? *ctx.prompts : PromptLibrary::Default();
}

std::string Complete(const DatagenContext& ctx, TemplateId id,
                     const Bindings& bindings) {
  ChatRequest request;
  request.model_id = ctx.model_id;
  request.messages = Prompts(ctx).render_messages(id, bindings);
  request.sampling = ctx.sampling;
  return ctx.gateway.complete(request).text;
}

void Log(const DatagenContext& ctx, DatagenLogEntry entry) {
  if (ctx.log) ctx.log->push_back(std::move(entry));
}

// Runs fn(i, ctx_i) in parallel with a private log per index, then appends
// the logs to ctx.log in index order.
template <typename Fn>
void ForEachLogged(std::size_t n, const DatagenContext& ctx, Fn&& fn) {
  std::vector<std::vector<DatagenLogEntry>> logs(n);
  ParallelFor(n, ctx.gateway.concurrency(), [&](std::size_t i) {
    DatagenContext local = ctx;
    local.log = &logs[i];
    fn(i, local);
  });
  for (auto& entries : logs) {
    for (auto& e : entries) Log(ctx, std::move(e));
  }
}

std::string_view OriginName(SeedOrigin o) {
  switch (o) {
    case SeedOrigin::kOpenmathLike:
      return "openmath_like";
    case SeedOrigin::kNuminaLike:
      return "numina_like";
    case SeedOrigin::kCustom:
      return "custom";
  }
  return "custom";
}

void WriteFile(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << content;
}

}  // namespace

std::vector<SeedSample> LoadSeeds(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::vector<SeedSample> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (Trim(line).empty()) continue;
    const std::string where = fmt::format("{}:{}", path.string(), number);
    SeedSample s;
    try {
      const json j = json::parse(line);
      s.id = j.value("id", fmt::format("seed-{}", number));
      s.question_en = j.at("question_en").get<std::string>();
      s.solution_en = j.at("solution_en").get<std::string>();
      const std::string origin = j.value("origin", std::string("custom"));
      if (origin == "openmath_like") {
        s.origin = SeedOrigin::kOpenmathLike;
      } else if (origin == "numina_like") {
        s.origin = SeedOrigin::kNuminaLike;
      } else if (origin == "custom") {
        s.origin = SeedOrigin::kCustom;
      } else {
        throw ValidationError(where + ": unknown origin '" + origin + "'");
      }
    } catch (const json::exception& e) {
      throw ValidationError(where + ": " + e.what());
    }
    if (Trim(s.question_en).empty() || Trim(s.solution_en).empty()) {
      throw ValidationError(where + ": empty question or solution");
    }
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<SeedSample> ReservoirSample(std::span<const SeedSample> seeds,
                                        std::size_t n, std::uint64_t seed) {
  if (n >= seeds.size()) return {seeds.begin(), seeds.end()};
  std::vector<std::size_t> reservoir(n);
  std::iota(reservoir.begin(), reservoir.end(), 0);
  std::mt19937_64 gen(seed);
  for (std::size_t i = n; i < seeds.size(); ++i) {
    const std::size_t j = gen() % (i + 1);
    if (j < n) reservoir[j] = i;
  }
  std::sort(reservoir.begin(), reservoir.end());
  std::vector<SeedSample> out;
  out.reserve(n);
  for (std::size_t i : reservoir) out.push_back(seeds[i]);
  return out;
}

void Separators::Validate() const {
  if (understand.empty() || solve.empty() || translate.empty()) {
    throw std::invalid_argument("separators must be non-empty");
  }
  if (understand == solve || solve == translate || understand == translate) {
    throw std::invalid_argument("separators must be distinct");
  }
}

void FilterPolicy::Validate() const {
  if (low_threshold > high_threshold) {
    throw std::invalid_argument("low threshold exceeds high threshold");
  }
  if (top_k && *top_k == 0) throw std::invalid_argument("top_k must be > 0");
}

SampleVerdict ParseSampleVerdict(std::string_view output) {
  std::string_view last;
  std::size_t start = 0;
  while (start <= output.size()) {
    auto end = output.find('\n', start);
    if (end == std::string_view::npos) end = output.size();
    const auto line = Trim(output.substr(start, end - start));
    if (!line.empty()) last = line;
    start = end + 1;
  }
  return last == "KEEP" ? SampleVerdict::kKeep : SampleVerdict::kDiscard;
}

void to_json(json& j, const DatagenLogEntry& e) {
  j = json{{"seed_id", e.seed_id},
           {"stage", e.stage},
           {"reason", e.reason},
           {"kind", e.skipped ? "skipped" : "discarded"}};
}

SampleVerdict validate_sample(std::string_view task, std::string_view original,
                              std::string_view generated,
                              const DatagenContext& ctx) {
  try {
    return ParseSampleVerdict(Complete(ctx, TemplateId::kValidateSample,
                                       {{"task", std::string(task)},
                                        {"original", std::string(original)},
                                        {"generated", std::string(generated)}}));
  } catch (const BackendError&) {
    return SampleVerdict::kDiscard;
  }
}

std::vector<KoreanPair> translate_questions(std::span<const SeedSample> seeds,
                                            const DatagenContext& ctx) {
  std::vector<std::optional<KoreanPair>> slots(seeds.size());
  ForEachLogged(seeds.size(), ctx, [&](std::size_t i,
                                       const DatagenContext& local) {
    const auto& seed = seeds[i];
    std::string ko;
    try {
      ko = std::string(Trim(Complete(local, TemplateId::kTranslateEnKo,
                                     {{"question", seed.question_en}})));
    } catch (const BackendError& e) {
      Log(local, {seed.id, "translate_question", e.what(), true});
      return;
    }
    if (validate_sample(kTaskQuestion, seed.question_en, ko, local) !=
        SampleVerdict::kKeep) {
      Log(local, {seed.id, "translate_question", "validator discarded", false});
      return;
    }
    slots[i] = KoreanPair{seed, std::move(ko), std::nullopt};
  });
  std::vector<KoreanPair> out;
  for (auto& s : slots) {
    if (s) out.push_back(std::move(*s));
  }
  return out;
}

std::vector<std::size_t> FilterScores(std::span<const double> scores,
                                      const FilterPolicy& policy) {
  policy.Validate();
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool pass = policy.keep == KeepSide::kHigh
                          ? scores[i] > policy.high_threshold
                          : scores[i] < policy.low_threshold;
    if (pass) kept.push_back(i);
  }
  if (policy.top_k && kept.size() > *policy.top_k) {
    std::stable_sort(kept.begin(), kept.end(),
                     [&](std::size_t a, std::size_t b) {
                       return scores[a] > scores[b];
                     });
    kept.resize(*policy.top_k);
    std::sort(kept.begin(), kept.end());
  }
  return kept;
}

std::vector<KoreanPair> score_and_filter(std::vector<KoreanPair> pairs,
                                         const FilterPolicy& policy,
                                         const DatagenContext& ctx) {
  policy.Validate();
  std::vector<bool> ok(pairs.size(), false);
  ForEachLogged(pairs.size(), ctx, [&](std::size_t i,
                                       const DatagenContext& local) {
    auto& pair = pairs[i];
    try {
      pair.rm_score = local.gateway.reward_score(
          {pair.question_ko, pair.seed.solution_en});
      ok[i] = true;
    } catch (const BackendError& e) {
      Log(local, {pair.seed.id, "score", e.what(), true});
    }
  });
  std::vector<KoreanPair> scored;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (ok[i]) scored.push_back(std::move(pairs[i]));
  }
  std::vector<double> scores;
  for (const auto& p : scored) scores.push_back(*p.rm_score);
  const auto kept = FilterScores(scores, policy);

  std::vector<bool> keep(scored.size(), false);
  for (std::size_t i : kept) keep[i] = true;
  std::vector<KoreanPair> out;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (keep[i]) {
      out.push_back(std::move(scored[i]));
      continue;
    }
    const bool threshold_pass = policy.keep == KeepSide::kHigh
                                    ? scores[i] > policy.high_threshold
                                    : scores[i] < policy.low_threshold;
    std::string reason =
        threshold_pass
            ? fmt::format("score {} outside top {}", scores[i], *policy.top_k)
        : policy.keep == KeepSide::kHigh
            ? fmt::format("score {} not above {}", scores[i],
                          policy.high_threshold)
            : fmt::format("score {} not below {}", scores[i],
                          policy.low_threshold);
    Log(ctx, {scored[i].seed.id, "score", std::move(reason), false});
  }
  return out;
}

std::string generate_understanding(const KoreanPair& pair,
                                   const DatagenContext& ctx) {
  std::string text(Trim(Complete(ctx, TemplateId::kUnderstandingGen,
                                 {{"question", pair.question_ko},
                                  {"solution", pair.seed.solution_en}})));
  if (text.empty()) throw ProviderError("empty understanding stage");
  return text;
}

std::optional<std::string> generate_korean_solution(
    const KoreanPair& pair, const DatagenContext& ctx) {
  std::string ko(Trim(Complete(ctx, TemplateId::kTranslateEnKo,
                               {{"question", pair.seed.solution_en}})));
  if (find_boxed_span(ko) != find_boxed_span(pair.seed.solution_en)) {
    Log(ctx, {pair.seed.id, "translate_solution",
              "boxed answer differs from the English solution", false});
    return std::nullopt;
  }
  if (validate_sample(kTaskSolution, pair.seed.solution_en, ko, ctx) !=
      SampleVerdict::kKeep) {
    Log(ctx, {pair.seed.id, "translate_solution", "validator discarded",
              false});
    return std::nullopt;
  }
  return ko;
}

void to_json(json& j, const TrainingConfig& c) {
  j = json{{"base_model", c.base_model},
           {"batch_size_per_gpu", c.batch_size_per_gpu},
           {"gpus", c.gpus},
           {"learning_rate", c.learning_rate},
           {"scheduler", c.scheduler},
           {"optimizer", c.optimizer},
           {"max_length", c.max_length},
           {"epochs", c.epochs}};
}

std::string ComposeTrainingText(const StagedTrainingExample& e,
                                const Separators& sep, const StageMask& mask) {
  std::string text = e.question_ko;
  if (mask.understand) text += sep.understand + e.understanding_en;
  if (mask.solve) text += sep.solve + e.solution_en;
  if (mask.translate) text += sep.translate + e.solution_ko;
  return text;
}

std::vector<std::string> ParseTrainingText(std::string_view text,
                                           const Separators& sep,
                                           const StageMask& mask) {
  std::vector<std::string_view> order;
  if (mask.understand) order.push_back(sep.understand);
  if (mask.solve) order.push_back(sep.solve);
  if (mask.translate) order.push_back(sep.translate);
  std::vector<std::string> segments;
  std::size_t pos = 0;
  for (std::string_view s : order) {
    const auto at = text.find(s, pos);
    if (at == std::string_view::npos) {
      throw ValidationError("separator '" + std::string(s) + "' missing");
    }
    segments.emplace_back(text.substr(pos, at - pos));
    pos = at + s.size();
  }
  segments.emplace_back(text.substr(pos));
  for (const auto& seg : segments) {
    for (std::string_view s : {std::string_view(sep.understand),
                               std::string_view(sep.solve),
                               std::string_view(sep.translate)}) {
      if (seg.find(s) != std::string::npos) {
        throw ValidationError("stray separator inside a segment");
      }
    }
  }
  return segments;
}

EmitResult emit_training_file(std::span<const StagedTrainingExample> examples,
                              const Separators& separators,
                              const fs::path& out_dir, const StageMask& mask,
                              const TrainingConfig& config) {
  separators.Validate();
  fs::create_directories(out_dir);
  EmitResult result;
  std::string lines;
  for (const auto& e : examples) {
    std::string collision;
    for (const auto& [stage, text] :
         {std::pair{"question_ko", &e.question_ko},
          std::pair{"understanding_en", &e.understanding_en},
          std::pair{"solution_en", &e.solution_en},
          std::pair{"solution_ko", &e.solution_ko}}) {
      for (const auto* s :
           {&separators.understand, &separators.solve, &separators.translate}) {
        if (text->find(*s) != std::string::npos) {
          collision = fmt::format("{} contains separator '{}'", stage, *s);
          break;
        }
      }
      if (!collision.empty()) break;
    }
    if (!collision.empty()) {
      result.rejected.push_back({e.id, "emit", collision, false});
      continue;
    }
    lines += json{{"id", e.id},
                  {"text", ComposeTrainingText(e, separators, mask)},
                  {"rm_score", e.rm_score}}
                 .dump() +
             "\n";
    ++result.emitted;
  }
  WriteFile(out_dir / "train.jsonl", lines);
  result.file_hash = Sha256Hex(lines);
  const json manifest = {
      {"examples", result.emitted},
      {"separators",
       {separators.understand, separators.solve, separators.translate}},
      {"stage_mask",
       {{"understand", mask.understand},
        {"solve", mask.solve},
        {"translate", mask.translate}}},
      {"training", config},
      {"file_hash", result.file_hash}};
  WriteFile(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return result;
}

DatagenReport run_datagen(std::span<const SeedSample> seeds, Gateway& gateway,
                          const DatagenOptions& options,
                          const fs::path& out_dir) {
  options.policy.Validate();
  options.separators.Validate();
  const std::vector<SeedSample> sampled =
      options.sample_size
          ? ReservoirSample(seeds, *options.sample_size, options.seed)
          : std::vector<SeedSample>(seeds.begin(), seeds.end());

  DatagenReport report;
  report.input = sampled.size();
  DatagenContext ctx{gateway, options.model_id, options.sampling,
                     options.prompts, &report.log};

  std::vector<KoreanPair> pairs = translate_questions(sampled, ctx);
  pairs = score_and_filter(std::move(pairs), options.policy, ctx);

  std::vector<std::optional<StagedTrainingExample>> staged(pairs.size());
  ForEachLogged(pairs.size(), ctx, [&](std::size_t i,
                                       const DatagenContext& local) {
    const auto& pair = pairs[i];
    StagedTrainingExample e;
    e.id = pair.seed.id;
    e.question_ko = pair.question_ko;
    e.solution_en = pair.seed.solution_en;
    e.rm_score = *pair.rm_score;
    try {
      e.understanding_en = generate_understanding(pair, local);
    } catch (const BackendError& err) {
      Log(local, {e.id, "understanding", err.what(), true});
      return;
    }
    try {
      auto ko = generate_korean_solution(pair, local);
      if (!ko) return;
      e.solution_ko = std::move(*ko);
    } catch (const BackendError& err) {
      Log(local, {e.id, "translate_solution", err.what(), true});
      return;
    }
    staged[i] = std::move(e);
  });

  std::vector<StagedTrainingExample> examples;
  for (auto& s : staged) {
    if (s) examples.push_back(std::move(*s));
  }
  EmitResult emitted = emit_training_file(examples, options.separators,
                                          out_dir, options.mask,
                                          options.training);
  for (auto& r : emitted.rejected) report.log.push_back(std::move(r));
  report.emitted = emitted.emitted;
  report.file_hash = emitted.file_hash;
  for (const auto& e : report.log) (e.skipped ? report.skipped : report.discarded)++;

  std::string lines;
  for (const auto& e : report.log) lines += json(e).dump() + "\n";
  WriteFile(out_dir / "discards.jsonl", lines);

  json manifest = json::parse(std::ifstream(out_dir / "manifest.json"));
  manifest["counts"] = {{"input", report.input},
                        {"emitted", report.emitted},
                        {"discarded", report.discarded},
                        {"skipped", report.skipped}};
  manifest["policy"] = {
      {"keep", options.policy.keep == KeepSide::kHigh ? "high" : "low"},
      {"high_threshold", options.policy.high_threshold},
      {"low_threshold", options.policy.low_threshold},
      {"top_k", options.policy.top_k ? json(*options.policy.top_k)
                                     : json(nullptr)}};
  std::vector<std::string> origins;
  for (const auto& s : sampled) origins.emplace_back(OriginName(s.origin));
  std::sort(origins.begin(), origins.end());
  origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
  manifest["origins"] = origins;
  WriteFile(out_dir / "manifest.json", manifest.dump(2) + "\n");
  return report;
}

}  // namespace bimath
