// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

// Prompt templates loaded from an asset directory.
//
// The directory holds one UTF-8 text file per template plus `manifest.json`
// listing, for each template id, its file, declared placeholders, and
// optionally a few-shot exemplar file. Placeholders are written `{{name}}`.
// Templates with "format": "messages" are split into chat turns on lines
// that read exactly `[System]`, `[User]` or `[Assistant]`.
//
// Few-shot templates expand the reserved `{{shots}}` placeholder into one
// block per exemplar using the manifest's `shot_format`, which itself uses
// `{{input}}` and `{{output}}`.

#ifndef BIMATH_PROMPT_LIBRARY_H_
#define BIMATH_PROMPT_LIBRARY_H_

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bimath/chat.h"

namespace bimath {

enum class TemplateId {
  kOcr,
  kTranslateEnKo,
  kTranslateKoEn,
  kSolveEn,
  kSolveKo,
  kUnderstandingGen,
  kTeTranslate,
  kTe2e2kTranslate,
  kJudge,
  kRmScoreRequest,
  kValidateSample,
};

inline constexpr std::array<TemplateId, 11> kAllTemplateIds = {
    TemplateId::kOcr,          TemplateId::kTranslateEnKo,
    TemplateId::kTranslateKoEn, TemplateId::kSolveEn,
    TemplateId::kSolveKo,      TemplateId::kUnderstandingGen,
    TemplateId::kTeTranslate,  TemplateId::kTe2e2kTranslate,
    TemplateId::kJudge,        TemplateId::kRmScoreRequest,
    TemplateId::kValidateSample,
};

std::string_view TemplateIdName(TemplateId id);
std::optional<TemplateId> ParseTemplateId(std::string_view name);

struct Shot {
  std::string input;
  std::string output;
};

struct PromptTemplate {
  TemplateId id;
  std::string body;
  std::vector<std::string> placeholders;
  std::vector<Shot> shots;
  std::optional<std::size_t> required_shots;
  std::string shot_format;
  bool messages = false;
  // Pre-split turns for message templates (role, unsubstituted text).
  std::vector<ChatMessage> turns;
};

using Bindings = std::map<std::string, std::string, std::less<>>;

class PromptLibrary {
 public:
  // Throws ValidationError on a malformed manifest, an undeclared
  // placeholder, or a wrong exemplar count.
  static PromptLibrary Load(const std::filesystem::path& dir);

  // Library from $BIMATH_ASSETS/prompts, else the assets bundled with the
  // source tree. Loaded once.
  static const PromptLibrary& Default();
  static std::filesystem::path DefaultAssetDir();

  const PromptTemplate& Get(TemplateId id) const;

  // Flat text. Throws std::invalid_argument naming a missing placeholder.
  std::string render(TemplateId id, const Bindings& bindings) const;
  // Same, for an id given as text; unknown ids are rejected.
  std::string render(std::string_view id, const Bindings& bindings) const;

  // Chat turns. Plain-text templates become a single user message.
  std::vector<ChatMessage> render_messages(TemplateId id,
                                           const Bindings& bindings) const;

  // Judge prompt with the two answers placed in A/B order, or exchanged
  // when `swap` is set. The caller keeps `swap` to map verdicts back.
  std::string render_judge_pair(std::string_view question,
                                std::string_view answer_a,
                                std::string_view answer_b, bool swap) const;
  std::vector<ChatMessage> judge_messages(std::string_view question,
                                          std::string_view answer_a,
                                          std::string_view answer_b,
                                          bool swap) const;

  // Replaces the exemplars of a few-shot template.
  void set_shots(TemplateId id, std::vector<Shot> shots);

 private:
  std::string Substitute(const PromptTemplate& t, std::string_view text,
                         const Bindings& bindings) const;

  std::map<TemplateId, PromptTemplate> templates_;
};

}  // namespace bimath

#endif  // BIMATH_PROMPT_LIBRARY_H_
