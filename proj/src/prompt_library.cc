// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/prompt_library.h"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "bimath/errors.h"

#ifndef BIMATH_DEFAULT_ASSET_DIR
#define BIMATH_DEFAULT_ASSET_DIR "assets"
#endif

namespace bimath {
namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::string_view kShotsPlaceholder = "shots";

std::string ReadFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string StripOneTrailingNewline(std::string s) {
  if (!s.empty() && s.back() == '\n') s.pop_back();
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

// Names of every {{placeholder}} in `text`, in order of first appearance.
std::vector<std::string> ScanPlaceholders(std::string_view text) {
  std::vector<std::string> names;
  std::size_t pos = 0;
  while ((pos = text.find("{{", pos)) != std::string_view::npos) {
    const auto end = text.find("}}", pos + 2);
    if (end == std::string_view::npos) break;
    std::string name(text.substr(pos + 2, end - pos - 2));
    if (std::find(names.begin(), names.end(), name) == names.end()) {
      names.push_back(std::move(name));
    }
    pos = end + 2;
  }
  return names;
}

std::optional<Role> RoleMarker(std::string_view line) {
  if (line == "[System]") return Role::kSystem;
  if (line == "[User]") return Role::kUser;
  if (line == "[Assistant]") return Role::kAssistant;
  return std::nullopt;
}

std::string TrimBlankLines(std::string s) {
  while (!s.empty() && s.back() == '\n') s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && s[start] == '\n') ++start;
  return s.substr(start);
}

std::vector<ChatMessage> SplitTurns(std::string_view body,
                                    std::string_view template_name) {
  std::vector<ChatMessage> turns;
  std::size_t pos = 0;
  while (pos <= body.size()) {
    auto nl = body.find('\n', pos);
    if (nl == std::string_view::npos) nl = body.size();
    std::string_view line = body.substr(pos, nl - pos);
    if (auto role = RoleMarker(line)) {
      turns.push_back({*role, ""});
    } else {
      if (turns.empty()) {
        throw ValidationError("message template '" +
                              std::string(template_name) +
                              "' must start with a role marker");
      }
      turns.back().text += line;
      turns.back().text += '\n';
    }
    pos = nl + 1;
  }
  for (auto& t : turns) t.text = TrimBlankLines(std::move(t.text));
  return turns;
}

}  // namespace

std::string_view TemplateIdName(TemplateId id) {
  switch (id) {
    case TemplateId::kOcr:
      return "ocr";
    case TemplateId::kTranslateEnKo:
      return "translate_en_ko";
    case TemplateId::kTranslateKoEn:
      return "translate_ko_en";
    case TemplateId::kSolveEn:
      return "solve_en";
    case TemplateId::kSolveKo:
      return "solve_ko";
    case TemplateId::kUnderstandingGen:
      return "understanding_gen";
    case TemplateId::kTeTranslate:
      return "te_translate";
    case TemplateId::kTe2e2kTranslate:
      return "te2e2k_translate";
    case TemplateId::kJudge:
      return "judge";
    case TemplateId::kRmScoreRequest:
      return "rm_score_request";
    case TemplateId::kValidateSample:
      return "validate_sample";
  }
  return "";
}

std::optional<TemplateId> ParseTemplateId(std::string_view name) {
  for (TemplateId id : kAllTemplateIds) {
    if (TemplateIdName(id) == name) return id;
  }
  return std::nullopt;
}

PromptLibrary PromptLibrary::Load(const fs::path& dir) {
  json manifest;
  try {
    manifest = json::parse(ReadFile(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw ValidationError("prompt manifest: " + std::string(e.what()));
  }
  PromptLibrary lib;
  for (const auto& [name, spec] : manifest.at("templates").items()) {
    auto id = ParseTemplateId(name);
    if (!id) throw ValidationError("unknown template id '" + name + "'");
    PromptTemplate t;
    t.id = *id;
    t.body = StripOneTrailingNewline(
        ReadFile(dir / spec.at("file").get<std::string>()));
    t.placeholders = spec.value("placeholders", std::vector<std::string>{});
    t.messages = spec.value("format", std::string("text")) == "messages";
    t.shot_format = spec.value("shot_format", std::string());
    if (spec.contains("shot_count")) {
      t.required_shots = spec.at("shot_count").get<std::size_t>();
    }
    if (spec.contains("shots")) {
      const auto shots =
          json::parse(ReadFile(dir / spec.at("shots").get<std::string>()));
      for (const auto& s : shots) {
        t.shots.push_back({s.at("input").get<std::string>(),
                           s.at("output").get<std::string>()});
      }
      if (t.shot_format.empty()) {
        throw ValidationError("template '" + name + "' has shots but no " +
                              "shot_format");
      }
    }
    if (t.required_shots && t.shots.size() != *t.required_shots) {
      throw ValidationError("template '" + name + "' needs exactly " +
                            std::to_string(*t.required_shots) + " shots, got " +
                            std::to_string(t.shots.size()));
    }

    const std::set<std::string> declared(t.placeholders.begin(),
                                         t.placeholders.end());
    const auto used = ScanPlaceholders(t.body);
    for (const auto& u : used) {
      const bool reserved = u == kShotsPlaceholder && !t.shot_format.empty();
      if (!reserved && !declared.contains(u)) {
        throw ValidationError("template '" + name +
                              "' uses undeclared placeholder '" + u + "'");
      }
    }
    for (const auto& d : declared) {
      if (std::find(used.begin(), used.end(), d) == used.end()) {
        throw ValidationError("template '" + name + "' declares '" + d +
                              "' but never uses it");
      }
    }
    if (t.messages) t.turns = SplitTurns(t.body, name);
    lib.templates_.emplace(t.id, std::move(t));
  }
  for (TemplateId id : kAllTemplateIds) {
    if (!lib.templates_.contains(id)) {
      throw ValidationError("prompt manifest lacks template '" +
                            std::string(TemplateIdName(id)) + "'");
    }
  }
  return lib;
}

fs::path PromptLibrary::DefaultAssetDir() {
  if (const char* env = std::getenv("BIMATH_ASSETS"); env && *env) {
    return fs::path(env);
  }
  return fs::path(BIMATH_DEFAULT_ASSET_DIR);
}

const PromptLibrary& PromptLibrary::Default() {
  static const PromptLibrary lib = Load(DefaultAssetDir() / "prompts");
  return lib;
}

const PromptTemplate& PromptLibrary::Get(TemplateId id) const {
  auto it = templates_.find(id);
  if (it == templates_.end()) {
    throw std::invalid_argument("template not loaded: " +
                                std::string(TemplateIdName(id)));
  }
  return it->second;
}

std::string PromptLibrary::Substitute(const PromptTemplate& t,
                                      std::string_view text,
                                      const Bindings& bindings) const {
  std::string out;
  out.reserve(text.size() + 256);
  std::size_t pos = 0;
  while (true) {
    const auto open = text.find("{{", pos);
    if (open == std::string_view::npos) break;
    const auto close = text.find("}}", open + 2);
    if (close == std::string_view::npos) break;
    out.append(text.substr(pos, open - pos));
    const std::string_view name = text.substr(open + 2, close - open - 2);
    if (name == kShotsPlaceholder && !t.shot_format.empty()) {
      for (const auto& shot : t.shots) {
        out += Substitute(
            PromptTemplate{}, t.shot_format,
            Bindings{{"input", shot.input}, {"output", shot.output}});
      }
    } else if (auto it = bindings.find(name); it != bindings.end()) {
      out += it->second;
    } else {
      throw std::invalid_argument("missing binding '" + std::string(name) +
                                  "' for template '" +
                                  std::string(TemplateIdName(t.id)) + "'");
    }
    pos = close + 2;
  }
  out.append(text.substr(pos));
  return out;
}

std::string PromptLibrary::render(TemplateId id,
                                  const Bindings& bindings) const {
  const auto& t = Get(id);
  return Substitute(t, t.body, bindings);
}

std::string PromptLibrary::render(std::string_view id,
                                  const Bindings& bindings) const {
  auto parsed = ParseTemplateId(id);
  if (!parsed) {
    throw std::invalid_argument("unknown template id '" + std::string(id) +
                                "'");
  }
  return render(*parsed, bindings);
}

std::vector<ChatMessage> PromptLibrary::render_messages(
    TemplateId id, const Bindings& bindings) const {
  const auto& t = Get(id);
  if (!t.messages) return {ChatMessage{Role::kUser, render(id, bindings)}};
  std::vector<ChatMessage> out;
  out.reserve(t.turns.size());
  for (const auto& turn : t.turns) {
    out.push_back({turn.role, Substitute(t, turn.text, bindings)});
  }
  return out;
}

namespace {

Bindings JudgeBindings(std::string_view question, std::string_view answer_a,
                       std::string_view answer_b, bool swap) {
  if (swap) std::swap(answer_a, answer_b);
  return Bindings{{"question", std::string(question)},
                  {"model_a_answer", std::string(answer_a)},
                  {"model_b_answer", std::string(answer_b)}};
}

}  // namespace

std::string PromptLibrary::render_judge_pair(std::string_view question,
                                             std::string_view answer_a,
                                             std::string_view answer_b,
                                             bool swap) const {
  return render(TemplateId::kJudge,
                JudgeBindings(question, answer_a, answer_b, swap));
}

std::vector<ChatMessage> PromptLibrary::judge_messages(
    std::string_view question, std::string_view answer_a,
    std::string_view answer_b, bool swap) const {
  return render_messages(TemplateId::kJudge,
                         JudgeBindings(question, answer_a, answer_b, swap));
}

void PromptLibrary::set_shots(TemplateId id, std::vector<Shot> shots) {
  auto& t = templates_.at(id);
  if (t.shot_format.empty()) {
    throw std::invalid_argument("template '" +
                                std::string(TemplateIdName(id)) +
                                "' takes no exemplars");
  }
  if (t.required_shots && shots.size() != *t.required_shots) {
    throw std::invalid_argument("template '" +
                                std::string(TemplateIdName(id)) +
                                "' needs exactly " +
                                std::to_string(*t.required_shots) + " shots");
  }
  t.shots = std::move(shots);
}

}  // namespace bimath
