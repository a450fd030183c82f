// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/core_model.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>
#include <utility>

#include "bimath/errors.h"
#include "bimath/hashing.h"

namespace bimath {
namespace {

using json = nlohmann::json;

constexpr std::array<std::pair<Subset, std::string_view>, 10> kSubsetNames{{
    {Subset::kGsm8k, "GSM8K"},
    {Subset::kMath, "MATH"},
    {Subset::kOmniMath, "OMNI_MATH"},
    {Subset::kMmmlu, "MMMLU"},
    {Subset::kKsmKmo, "KSM-KMO"},
    {Subset::kKsmKjmo, "KSM-KJMO"},
    {Subset::kKsmCsat, "KSM-CSAT"},
    {Subset::kKsmKms, "KSM-KMS"},
    {Subset::kKsmTq, "KSM-TQ"},
    {Subset::kCustom, "custom"},
}};

std::string Lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

bool IsBlank(std::string_view s) {
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isspace(c); });
}

template <typename T>
T Required(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end()) {
    throw ValidationError(std::string("missing field '") + key + "'");
  }
  return it->get<T>();
}

}  // namespace

std::string_view SubsetName(Subset subset) {
  for (const auto& [s, name] : kSubsetNames) {
    if (s == subset) return name;
  }
  return "custom";
}

std::optional<Subset> ParseSubset(std::string_view name) {
  for (const auto& [s, n] : kSubsetNames) {
    if (n == name) return s;
  }
  return std::nullopt;
}

std::string_view ReportColumn(Subset subset) {
  switch (subset) {
    case Subset::kGsm8k:
      return "GSM8K";
    case Subset::kMath:
      return "MATH";
    case Subset::kOmniMath:
      return "Omni-MATH";
    case Subset::kMmmlu:
      return "MMMLU";
    case Subset::kKsmKmo:
    case Subset::kKsmKjmo:
    case Subset::kKsmCsat:
    case Subset::kKsmKms:
    case Subset::kKsmTq:
      return "KSM";
    case Subset::kCustom:
      return "custom";
  }
  return "custom";
}

const std::vector<std::string>& ReportColumnOrder() {
  static const std::vector<std::string> kOrder = {
      "GSM8K", "MATH", "Omni-MATH", "MMMLU", "KSM", "custom"};
  return kOrder;
}

bool IsMultipleChoice(Subset subset) { return subset == Subset::kMmmlu; }

std::string_view LanguageName(Language lang) {
  return lang == Language::kKo ? "ko" : "en";
}

std::string_view ModeNameString(ModeName name) {
  switch (name) {
    case ModeName::kK2K:
      return "K2K";
    case ModeName::kK2E:
      return "K2E";
    case ModeName::kE2E:
      return "E2E";
    case ModeName::kTE2E:
      return "TE2E";
    case ModeName::kMSI:
      return "MSI";
  }
  return "K2K";
}

PromptingMode mode_for(std::string_view name) {
  const std::string key = Lower(name);
  using enum PipelineStep;
  if (key == "k2k") {
    return {ModeName::kK2K, Language::kKo, Language::kKo, {kSolve}};
  }
  if (key == "k2e") {
    return {ModeName::kK2E, Language::kKo, Language::kEn, {kSolve}};
  }
  if (key == "e2e") {
    return {ModeName::kE2E, Language::kEn, Language::kEn, {kSolve}};
  }
  if (key == "te2e") {
    return {ModeName::kTE2E,
            Language::kKo,
            Language::kEn,
            {kTranslateQuestion, kSolve}};
  }
  if (key == "msi") {
    return {ModeName::kMSI,
            Language::kKo,
            Language::kEn,
            {kTranslateQuestion, kSolve, kTranslateSolution}};
  }
  throw std::invalid_argument("unknown prompting mode '" + std::string(name) +
                              "'");
}

void SamplingConfig::Validate() const {
  if (!(temperature >= 0.0)) {
    throw std::invalid_argument("temperature must be >= 0");
  }
  if (!(top_p > 0.0 && top_p <= 1.0)) {
    throw std::invalid_argument("top_p must be in (0, 1]");
  }
  if (min_tokens <= 0 || min_tokens > max_tokens) {
    throw std::invalid_argument("require 0 < min_tokens <= max_tokens");
  }
}

std::string_view VerdictName(Verdict v) {
  switch (v) {
    case Verdict::kCorrect:
      return "correct";
    case Verdict::kIncorrect:
      return "incorrect";
    case Verdict::kUnparseable:
      return "unparseable";
  }
  return "unparseable";
}

// --- JSON -----------------------------------------------------------------

void to_json(json& j, const GoldAnswer& a) {
  if (a.is_numeric()) {
    j = json{{"kind", "numeric"}, {"numeric_value", a.numeric().to_string()}};
  } else {
    j = json{{"kind", "choice"},
             {"choice_label", std::string(1, a.choice().label)},
             {"choice_text", a.choice().text}};
  }
}

void from_json(const json& j, GoldAnswer& a) {
  const auto kind = Required<std::string>(j, "kind");
  if (kind == "numeric") {
    const auto& v = j.at("numeric_value");
    std::optional<Rational> r;
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      r = Rational::FromString(s);
      if (!r) r = Rational::FromDecimal(s);
    } else if (v.is_number_integer()) {
      r = Rational(v.get<long long>());
    }
    if (!r) throw ValidationError("numeric_value is not an exact number");
    a = GoldAnswer::Numeric(*r);
  } else if (kind == "choice") {
    const auto label = Required<std::string>(j, "choice_label");
    if (label.size() != 1 || label[0] < 'A' || label[0] > 'D') {
      throw ValidationError("choice_label must be one of A-D");
    }
    a = GoldAnswer::Choice(label[0], j.value("choice_text", std::string()));
  } else {
    throw ValidationError("unknown answer kind '" + kind + "'");
  }
}

void to_json(json& j, const BilingualProblem& p) {
  j = json{{"id", p.id},
           {"subset", SubsetName(p.subset)},
           {"question_ko", p.question_ko},
           {"question_en", p.question_en},
           {"answer", p.answer},
           {"source_direction", p.source_direction == SourceDirection::kKoToEn
                                    ? "ko_to_en"
                                    : "en_to_ko"}};
}

void from_json(const json& j, BilingualProblem& p) {
  p.id = Required<std::string>(j, "id");
  const auto subset = Required<std::string>(j, "subset");
  auto parsed = ParseSubset(subset);
  if (!parsed) throw ValidationError("unknown subset '" + subset + "'");
  p.subset = *parsed;
  p.question_ko = Required<std::string>(j, "question_ko");
  p.question_en = Required<std::string>(j, "question_en");
  p.answer = Required<GoldAnswer>(j, "answer");
  const auto dir = j.value("source_direction", std::string("en_to_ko"));
  if (dir == "ko_to_en") {
    p.source_direction = SourceDirection::kKoToEn;
  } else if (dir == "en_to_ko") {
    p.source_direction = SourceDirection::kEnToKo;
  } else {
    throw ValidationError("unknown source_direction '" + dir + "'");
  }
}

void to_json(json& j, const SamplingConfig& s) {
  j = json{{"temperature", s.temperature},
           {"top_p", s.top_p},
           {"min_tokens", s.min_tokens},
           {"max_tokens", s.max_tokens}};
  j["seed"] = s.seed ? json(*s.seed) : json(nullptr);
}

void from_json(const json& j, SamplingConfig& s) {
  s.temperature = j.value("temperature", 0.7);
  s.top_p = j.value("top_p", 0.95);
  s.min_tokens = j.value("min_tokens", 8);
  s.max_tokens = j.value("max_tokens", 2048);
  s.seed.reset();
  if (auto it = j.find("seed"); it != j.end() && !it->is_null()) {
    s.seed = it->get<std::uint64_t>();
  }
}

void to_json(json& j, const TokenUsage& u) {
  j = json{{"input_tokens", u.input_tokens},
           {"output_tokens", u.output_tokens}};
}

void from_json(const json& j, TokenUsage& u) {
  u.input_tokens = j.value("input_tokens", std::uint64_t{0});
  u.output_tokens = j.value("output_tokens", std::uint64_t{0});
}

void to_json(json& j, const ExtractedAnswer& a) {
  j = json{{"raw_span", a.raw_span}};
  switch (a.kind) {
    case AnswerKind::kNumeric:
      j["kind"] = "numeric";
      j["normalized"] = a.numeric->to_string();
      break;
    case AnswerKind::kChoice:
      j["kind"] = "choice";
      j["normalized"] = std::string(1, *a.choice);
      break;
    case AnswerKind::kUnparseable:
      j["kind"] = "unparseable";
      j["normalized"] = nullptr;
      break;
  }
}

void from_json(const json& j, ExtractedAnswer& a) {
  a = ExtractedAnswer{};
  a.raw_span = j.value("raw_span", std::string());
  const auto kind = j.value("kind", std::string("unparseable"));
  if (kind == "numeric") {
    a.kind = AnswerKind::kNumeric;
    a.numeric = Rational::FromString(j.at("normalized").get<std::string>());
    if (!a.numeric) throw ValidationError("bad normalized numeric");
  } else if (kind == "choice") {
    a.kind = AnswerKind::kChoice;
    const auto s = j.at("normalized").get<std::string>();
    if (s.size() != 1) throw ValidationError("bad normalized choice");
    a.choice = s[0];
  }
}

void to_json(json& j, const InferenceRecord& r) {
  j = json{{"problem_id", r.problem_id},
           {"subset", SubsetName(r.subset)},
           {"mode", ModeNameString(r.mode)},
           {"step_index", r.step_index},
           {"prompt_text", r.prompt_text},
           {"raw_output", r.raw_output},
           {"token_usage", r.usage},
           {"verdict", VerdictName(r.verdict)},
           {"scored", r.scored}};
  j["extracted_answer"] = r.extracted ? json(*r.extracted) : json(nullptr);
  if (!r.error.empty()) j["error"] = r.error;
}

void from_json(const json& j, InferenceRecord& r) {
  r = InferenceRecord{};
  r.problem_id = Required<std::string>(j, "problem_id");
  auto subset = ParseSubset(Required<std::string>(j, "subset"));
  if (!subset) throw ValidationError("unknown subset in record");
  r.subset = *subset;
  r.mode = mode_for(Required<std::string>(j, "mode")).name;
  r.step_index = Required<int>(j, "step_index");
  r.prompt_text = j.value("prompt_text", std::string());
  r.raw_output = j.value("raw_output", std::string());
  r.usage = j.value("token_usage", TokenUsage{});
  if (auto it = j.find("extracted_answer"); it != j.end() && !it->is_null()) {
    r.extracted = it->get<ExtractedAnswer>();
  }
  const auto verdict = Required<std::string>(j, "verdict");
  if (verdict == "correct") {
    r.verdict = Verdict::kCorrect;
  } else if (verdict == "incorrect") {
    r.verdict = Verdict::kIncorrect;
  } else if (verdict == "unparseable") {
    r.verdict = Verdict::kUnparseable;
  } else {
    throw ValidationError("unknown verdict '" + verdict + "'");
  }
  r.scored = j.value("scored", false);
  r.error = j.value("error", std::string());
}

// --- Dataset files --------------------------------------------------------

std::vector<BilingualProblem> ParseDataset(std::string_view text) {
  std::vector<BilingualProblem> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (IsBlank(line)) continue;
    try {
      out.push_back(json::parse(line).get<BilingualProblem>());
    } catch (const std::exception& e) {
      throw ValidationError("dataset line " + std::to_string(line_no) + ": " +
                            e.what());
    }
  }
  return out;
}

std::vector<BilingualProblem> LoadDataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open dataset " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ParseDataset(ss.str());
}

std::string SerializeDataset(std::span<const BilingualProblem> items) {
  std::string out;
  for (const auto& item : items) {
    out += json(item).dump();
    out += '\n';
  }
  return out;
}

void SaveDataset(const std::filesystem::path& path,
                 std::span<const BilingualProblem> items) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write dataset " + path.string());
  out << SerializeDataset(items);
}

std::string DatasetHash(std::span<const BilingualProblem> items) {
  return Sha256Hex(SerializeDataset(items));
}

ValidationReport validate_dataset(std::span<const BilingualProblem> items) {
  using Kind = ValidationFinding::Kind;
  ValidationReport report;
  std::unordered_set<std::string> seen;
  for (const auto& item : items) {
    if (!seen.insert(item.id).second) {
      report.findings.push_back(
          {Kind::kDuplicateId, item.id, "duplicate id '" + item.id + "'"});
    }
    if (item.id.empty()) {
      report.findings.push_back({Kind::kEmptyField, item.id, "empty id"});
    }
    if (IsBlank(item.question_ko)) {
      report.findings.push_back(
          {Kind::kEmptyField, item.id, "empty question_ko"});
    }
    if (IsBlank(item.question_en)) {
      report.findings.push_back(
          {Kind::kEmptyField, item.id, "empty question_en"});
    }
    // custom datasets may carry either answer kind.
    const bool wants_choice = IsMultipleChoice(item.subset);
    if (item.subset != Subset::kCustom &&
        wants_choice == item.answer.is_numeric()) {
      report.findings.push_back(
          {Kind::kKindMismatch, item.id,
           std::string(SubsetName(item.subset)) + " item requires a " +
               (wants_choice ? "choice" : "numeric") + " answer"});
    }
    if (!item.answer.is_numeric()) {
      const auto& c = item.answer.choice();
      if (c.label < 'A' || c.label > 'D') {
        report.findings.push_back(
            {Kind::kBadChoice, item.id, "choice label outside A-D"});
      }
    }
  }
  return report;
}

}  // namespace bimath
