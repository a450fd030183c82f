// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include "bimath/answer_verification.h"

#include <algorithm>
#include <array>
#include <cctype>
#include <stdexcept>

namespace bimath {
namespace {

constexpr std::string_view kBoxed = "\\boxed";

bool IsSpace(char c) { return std::isspace(static_cast<unsigned char>(c)); }
bool IsDigit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

std::string_view Trim(std::string_view s) {
  while (!s.empty() && IsSpace(s.front())) s.remove_prefix(1);
  while (!s.empty() && IsSpace(s.back())) s.remove_suffix(1);
  return s;
}

bool IsEscaped(std::string_view s, std::size_t pos) {
  std::size_t backslashes = 0;
  while (pos > backslashes && s[pos - backslashes - 1] == '\\') ++backslashes;
  return backslashes % 2 == 1;
}

// Index of the '}' closing the '{' at `open`, or npos.
std::size_t MatchingBrace(std::string_view s, std::size_t open) {
  int depth = 0;
  for (std::size_t i = open; i < s.size(); ++i) {
    if (s[i] != '{' && s[i] != '}') continue;
    if (IsEscaped(s, i)) continue;
    depth += s[i] == '{' ? 1 : -1;
    if (depth == 0) return i;
  }
  return std::string_view::npos;
}

void ReplaceAll(std::string& s, std::string_view from, std::string_view to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

constexpr std::array<std::string_view, 6> kWrappers = {
    "\\text{", "\\textbf{", "\\mathbf{", "\\mathrm{", "\\mbox{", "\\textrm{"};

bool StripOnce(std::string& s) {
  const std::string before = s;
  std::string_view v = Trim(s);

  // Whole-string delimiters.
  if (v.size() >= 2 && v.front() == '$' && v.back() == '$' &&
      !IsEscaped(v, v.size() - 1)) {
    v = v.substr(1, v.size() - 2);
  } else if (v.starts_with("\\(") && v.ends_with("\\)")) {
    v = v.substr(2, v.size() - 4);
  } else if (v.starts_with("\\[") && v.ends_with("\\]")) {
    v = v.substr(2, v.size() - 4);
  }
  v = Trim(v);

  // Currency prefix.
  if (v.starts_with("\\$")) {
    v.remove_prefix(2);
  } else if (v.starts_with("$")) {
    v.remove_prefix(1);
  }
  // Unit-ish suffixes.
  for (std::string_view suffix :
       {std::string_view("\\%"), std::string_view("%"),
        std::string_view("^{\\circ}"), std::string_view("^\\circ"),
        std::string_view("\xC2\xB0"), std::string_view(".")}) {
    if (v.size() > suffix.size() && v.ends_with(suffix)) {
      v.remove_suffix(suffix.size());
      break;
    }
  }
  v = Trim(v);

  std::string next(v);
  // Whole-string wrappers: \text{X}, {X}, (X).
  bool unwrapped = false;
  for (std::string_view w : kWrappers) {
    if (next.starts_with(w) && MatchingBrace(next, w.size() - 1) ==
                                   next.size() - 1) {
      next = next.substr(w.size(), next.size() - w.size() - 1);
      unwrapped = true;
      break;
    }
  }
  if (!unwrapped && next.size() >= 2 && next.front() == '{' &&
      MatchingBrace(next, 0) == next.size() - 1) {
    next = next.substr(1, next.size() - 2);
    unwrapped = true;
  }
  if (!unwrapped && next.size() >= 2 && next.front() == '(' &&
      next.back() == ')') {
    int depth = 0;
    bool outer = true;
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (next[i] == '(') ++depth;
      if (next[i] == ')') --depth;
      if (depth == 0 && i + 1 < next.size()) {
        outer = false;
        break;
      }
    }
    if (outer) {
      next = next.substr(1, next.size() - 2);
      unwrapped = true;
    }
  }
  // Trailing unit text: "18\text{ dollars}".
  if (!unwrapped && !next.empty() && next.back() == '}') {
    for (std::string_view w : kWrappers) {
      const auto pos = next.rfind(w);
      if (pos != std::string::npos && pos > 0 &&
          MatchingBrace(next, pos + w.size() - 1) == next.size() - 1) {
        next.erase(pos);
        break;
      }
    }
  }
  // "x = 8" -> "8".
  if (const auto eq = next.rfind('='); eq != std::string::npos) {
    next.erase(0, eq + 1);
  }
  s = std::string(Trim(next));
  return s != before;
}

std::string Clean(std::string_view raw) {
  std::string s(Trim(raw));
  ReplaceAll(s, "\xE2\x88\x92", "-");  // U+2212 minus sign
  ReplaceAll(s, "{,}", ",");
  for (std::string_view thin : {"\\!", "\\,", "\\;", "\\:", "\\ ", "~"}) {
    ReplaceAll(s, thin, "");
  }
  ReplaceAll(s, "\\left", "");
  ReplaceAll(s, "\\right", "");
  for (int guard = 0; guard < 16 && StripOnce(s); ++guard) {
  }
  return s;
}

// Recursive-descent parser over a cleaned numeric string.
class NumberParser {
 public:
  explicit NumberParser(std::string_view s) : s_(s) {}

  std::optional<Rational> ParseAll() {
    auto value = ParseSigned();
    SkipSpace();
    if (!value || pos_ != s_.size()) return std::nullopt;
    return value;
  }

 private:
  void SkipSpace() {
    while (pos_ < s_.size() && IsSpace(s_[pos_])) ++pos_;
  }

  bool Consume(std::string_view token) {
    SkipSpace();
    if (s_.substr(pos_).starts_with(token)) {
      pos_ += token.size();
      return true;
    }
    return false;
  }

  bool AtFrac() {
    SkipSpace();
    auto rest = s_.substr(pos_);
    return rest.starts_with("\\frac") || rest.starts_with("\\dfrac") ||
           rest.starts_with("\\tfrac");
  }

  std::optional<Rational> ParseSigned() {
    SkipSpace();
    bool negative = false;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
      negative = s_[pos_] == '-';
      ++pos_;
    }
    auto magnitude = ParseUnsigned();
    if (!magnitude) return std::nullopt;
    return negative ? -*magnitude : *magnitude;
  }

  std::optional<Rational> ParseUnsigned() {
    if (AtFrac()) return ParseFrac();
    auto lead = ParseDecimal();
    if (!lead) return std::nullopt;
    const bool integral = lead_was_integer_;
    SkipSpace();
    if (pos_ == s_.size()) return lead;

    if (integral && AtFrac()) {
      auto frac = ParseFrac();
      if (!frac || *frac < Rational(0)) return std::nullopt;
      return *lead + *frac;
    }
    if (Consume("/")) {
      auto den = ParseSigned();
      if (!den || den->is_zero()) return std::nullopt;
      return *lead / *den;
    }
    if (Consume("\\times") || Consume("\\cdot") || Consume("\xC3\x97")) {
      if (!Consume("10^")) return std::nullopt;
      auto exponent = ParseExponent();
      if (!exponent) return std::nullopt;
      Rational scale(1);
      const Rational ten(10);
      for (int i = 0; i < std::abs(*exponent); ++i) scale = scale * ten;
      return *exponent >= 0 ? *lead * scale : *lead / scale;
    }
    return lead;  // caller checks for trailing garbage
  }

  std::optional<int> ParseExponent() {
    std::string_view body;
    if (pos_ < s_.size() && s_[pos_] == '{') {
      const auto close = MatchingBrace(s_, pos_);
      if (close == std::string_view::npos) return std::nullopt;
      body = Trim(s_.substr(pos_ + 1, close - pos_ - 1));
      pos_ = close + 1;
    } else {
      const auto start = pos_;
      if (pos_ < s_.size() && s_[pos_] == '-') ++pos_;
      while (pos_ < s_.size() && IsDigit(s_[pos_])) ++pos_;
      body = s_.substr(start, pos_ - start);
    }
    bool negative = false;
    if (!body.empty() && (body.front() == '-' || body.front() == '+')) {
      negative = body.front() == '-';
      body.remove_prefix(1);
    }
    if (body.empty() || body.size() > 4 ||
        !std::all_of(body.begin(), body.end(), IsDigit)) {
      return std::nullopt;
    }
    const int value = std::stoi(std::string(body));
    return negative ? -value : value;
  }

  // Digits with optional thousands separators and decimal point.
  std::optional<Rational> ParseDecimal() {
    SkipSpace();
    const auto start = pos_;
    while (pos_ < s_.size() &&
           (IsDigit(s_[pos_]) || s_[pos_] == ',' || s_[pos_] == '.')) {
      ++pos_;
    }
    std::string_view token = s_.substr(start, pos_ - start);
    if (token.empty()) return std::nullopt;
    const auto dot = token.find('.');
    if (dot != std::string_view::npos &&
        token.find('.', dot + 1) != std::string_view::npos) {
      return std::nullopt;
    }
    std::string_view whole = token.substr(0, dot);
    if (token.substr(dot == std::string_view::npos ? token.size() : dot)
            .find(',') != std::string_view::npos) {
      return std::nullopt;  // separator after the decimal point
    }
    std::string digits;
    if (whole.find(',') != std::string_view::npos) {
      // 1-3 leading digits, then groups of exactly three.
      std::size_t group_start = 0;
      bool first = true;
      while (true) {
        const auto comma = whole.find(',', group_start);
        const auto group = whole.substr(group_start, comma == std::string_view::npos
                                                         ? std::string_view::npos
                                                         : comma - group_start);
        const bool ok = first ? (group.size() >= 1 && group.size() <= 3)
                              : group.size() == 3;
        if (!ok) return std::nullopt;
        digits += group;
        first = false;
        if (comma == std::string_view::npos) break;
        group_start = comma + 1;
      }
    } else {
      digits = std::string(whole);
    }
    std::string normalized = digits;
    if (dot != std::string_view::npos) {
      normalized += token.substr(dot);
    }
    lead_was_integer_ = dot == std::string_view::npos && !digits.empty();
    return Rational::FromDecimal(normalized);
  }

  std::optional<Rational> ParseFracArg() {
    SkipSpace();
    if (pos_ >= s_.size()) return std::nullopt;
    if (s_[pos_] == '{') {
      const auto close = MatchingBrace(s_, pos_);
      if (close == std::string_view::npos) return std::nullopt;
      auto inner = s_.substr(pos_ + 1, close - pos_ - 1);
      pos_ = close + 1;
      return NumberParser(inner).ParseAll();
    }
    if (IsDigit(s_[pos_])) {  // \frac34
      return Rational(s_[pos_++] - '0');
    }
    return std::nullopt;
  }

  std::optional<Rational> ParseFrac() {
    if (!Consume("\\frac") && !Consume("\\dfrac") && !Consume("\\tfrac")) {
      return std::nullopt;
    }
    auto num = ParseFracArg();
    auto den = ParseFracArg();
    if (!num || !den || den->is_zero()) return std::nullopt;
    return *num / *den;
  }

  std::string_view s_;
  std::size_t pos_ = 0;
  bool lead_was_integer_ = false;
};

std::string CollapseWhitespace(std::string_view s) {
  std::string out;
  bool pending_space = false;
  for (char c : Trim(s)) {
    if (IsSpace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out += ' ';
    pending_space = false;
    out += c;
  }
  return out;
}

}  // namespace

std::optional<std::string> find_boxed_span(std::string_view output) {
  std::size_t search_end = output.size();
  while (search_end > 0) {
    const auto pos = output.rfind(kBoxed, search_end - 1);
    if (pos == std::string_view::npos) return std::nullopt;
    search_end = pos;
    std::size_t open = pos + kBoxed.size();
    while (open < output.size() && IsSpace(output[open])) ++open;
    if (open >= output.size() || output[open] != '{') continue;
    const auto close = MatchingBrace(output, open);
    if (close == std::string_view::npos) return std::nullopt;
    return std::string(output.substr(open + 1, close - open - 1));
  }
  return std::nullopt;
}

std::optional<Rational> normalize_numeric(std::string_view raw) {
  const std::string cleaned = Clean(raw);
  if (cleaned.empty()) return std::nullopt;
  return NumberParser(cleaned).ParseAll();
}

std::optional<char> normalize_choice(std::string_view raw) {
  const std::string s = Clean(raw);
  auto is_label = [](char c) { return c >= 'A' && c <= 'D'; };
  if (s.size() >= 3 && s[0] == '(' && is_label(s[1]) && s[2] == ')') {
    return s[1];
  }
  if (!s.empty() && is_label(s[0])) {
    if (s.size() == 1) return s[0];
    if (s[1] == ')' || s[1] == '.' || s[1] == ':') return s[0];
  }
  return std::nullopt;
}

ExtractedAnswer extract_boxed(std::string_view output) {
  ExtractedAnswer out;
  auto span = find_boxed_span(output);
  if (!span) return out;
  out.raw_span = std::move(*span);
  if (auto value = normalize_numeric(out.raw_span)) {
    out.kind = AnswerKind::kNumeric;
    out.numeric = std::move(value);
  } else if (auto label = normalize_choice(out.raw_span)) {
    out.kind = AnswerKind::kChoice;
    out.choice = label;
  }
  return out;
}

Verdict judge_correct(const ExtractedAnswer& extracted,
                      const GoldAnswer& gold) {
  if (gold.is_numeric()) {
    return extracted.kind == AnswerKind::kNumeric &&
                   *extracted.numeric == gold.numeric()
               ? Verdict::kCorrect
               : Verdict::kIncorrect;
  }
  const auto& choice = gold.choice();
  if (extracted.kind == AnswerKind::kChoice) {
    return *extracted.choice == choice.label ? Verdict::kCorrect
                                             : Verdict::kIncorrect;
  }
  const std::string option = CollapseWhitespace(choice.text);
  if (!option.empty() && !extracted.raw_span.empty() &&
      (CollapseWhitespace(extracted.raw_span) == option ||
       CollapseWhitespace(Clean(extracted.raw_span)) == option)) {
    return Verdict::kCorrect;
  }
  return Verdict::kIncorrect;
}

Verdict judge_output(std::string_view output, const GoldAnswer& gold,
                     std::optional<ExtractedAnswer>* extracted) {
  if (extracted) extracted->reset();
  if (!find_boxed_span(output)) return Verdict::kUnparseable;
  ExtractedAnswer answer = extract_boxed(output);
  const Verdict verdict = judge_correct(answer, gold);
  if (extracted) *extracted = std::move(answer);
  return verdict;
}

std::vector<std::string> AccuracyTable::columns() const {
  std::vector<std::string> out;
  for (const auto& column : ReportColumnOrder()) {
    if (by_column.contains(column)) out.push_back(column);
  }
  return out;
}

AccuracyTable accuracy(std::span<const InferenceRecord> records) {
  AccuracyTable table;
  for (const auto& r : records) {
    if (!r.scored) continue;
    auto& cell = table.by_column[std::string(ReportColumn(r.subset))];
    ++cell.total;
    if (r.verdict == Verdict::kCorrect) ++cell.correct;
  }
  if (table.by_column.empty()) {
    throw std::invalid_argument("accuracy needs at least one scored record");
  }
  // Sum in canonical column order so the result does not depend on
  // record order.
  double sum = 0.0;
  for (const auto& column : table.columns()) {
    sum += table.by_column.at(column).percent();
  }
  table.average = sum / static_cast<double>(table.by_column.size());
  return table;
}

}  // namespace bimath
