// Copyright 2026 The bimath Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <nlohmann/json.hpp>

#include "bimath/core_model.h"
#include "bimath/errors.h"
#include "bimath/hashing.h"
#include "bimath/rational.h"
#include "test_util.h"

namespace bimath {
namespace {

using nlohmann::json;

BilingualProblem Sample() {
  BilingualProblem p;
  p.id = "g1";
  p.subset = Subset::kGsm8k;
  p.question_ko = "사과가 3개 있습니다.";
  p.question_en = "There are 3 apples.";
  p.answer = GoldAnswer::Numeric(*Rational::FromString("3"));
  return p;
}

TEST_CASE("rational parsing is exact") {
  CHECK(Rational::FromString("6/8") == Rational(3) / Rational(4));
  CHECK(Rational::FromString("-7")->to_string() == "-7");
  CHECK(Rational::FromString("1/0") == std::nullopt);
  CHECK(Rational::FromString("1.5") == std::nullopt);
  CHECK(Rational::FromDecimal("-12.5") == Rational(-25) / Rational(2));
  CHECK(Rational::FromDecimal(".75") == Rational(3) / Rational(4));
  CHECK(Rational::FromDecimal("3.") == Rational(3));
  CHECK(Rational::FromDecimal("1e5") == std::nullopt);
  CHECK((Rational(1) / Rational(3)).to_string() == "1/3");
  CHECK_THROWS_AS(Rational(1) / Rational(0), std::domain_error);
}

TEST_CASE("dataset json round trip") {
  auto p = Sample();
  BilingualProblem mc = p;
  mc.id = "m1";
  mc.subset = Subset::kMmmlu;
  mc.answer = GoldAnswer::Choice('C', "blue");
  mc.source_direction = SourceDirection::kKoToEn;
  std::vector<BilingualProblem> items{p, mc};
  const auto text = SerializeDataset(items);
  CHECK(ParseDataset(text) == items);
  CHECK(DatasetHash(items) == Sha256Hex(text));
  CHECK(DatasetHash(items) != DatasetHash(std::vector<BilingualProblem>{p}));
}

TEST_CASE("gold answers accept decimal strings and integers") {
  auto j = json::parse(
      R"({"id":"a","subset":"MATH","question_ko":"q","question_en":"q",)"
      R"("answer":{"kind":"numeric","numeric_value":"0.25"}})");
  CHECK(j.get<BilingualProblem>().answer.numeric() ==
        Rational(1) / Rational(4));
  j["answer"]["numeric_value"] = 12;
  CHECK(j.get<BilingualProblem>().answer.numeric() == Rational(12));
  j["answer"]["numeric_value"] = "abc";
  CHECK_THROWS_AS(j.get<BilingualProblem>(), ValidationError);
  j["answer"] = {{"kind", "choice"}, {"choice_label", "E"}};
  CHECK_THROWS_AS(j.get<BilingualProblem>(), ValidationError);
}

TEST_CASE("malformed dataset lines name the line") {
  const std::string text =
      SerializeDataset(std::vector<BilingualProblem>{Sample()}) + "\n{oops\n";
  try {
    ParseDataset(text);
    FAIL("expected ValidationError");
  } catch (const ValidationError& e) {
    CHECK(std::string(e.what()).find("3") != std::string::npos);
  }
}

TEST_CASE("dataset validation findings") {
  auto a = Sample();
  auto b = Sample();
  b.question_en = "  ";
  auto c = Sample();
  c.id = "c";
  c.subset = Subset::kMmmlu;
  const auto report =
      validate_dataset(std::vector<BilingualProblem>{a, b, c});
  REQUIRE(report.findings.size() == 3);
  CHECK(report.findings[0].kind == ValidationFinding::Kind::kDuplicateId);
  CHECK(report.findings[1].kind == ValidationFinding::Kind::kEmptyField);
  CHECK(report.findings[2].kind == ValidationFinding::Kind::kKindMismatch);
  CHECK(validate_dataset(std::vector<BilingualProblem>{a}).ok());
}

TEST_CASE("modes") {
  CHECK(mode_for("K2E").input_language == Language::kKo);
  CHECK(mode_for("k2e").reasoning_language == Language::kEn);
  CHECK(mode_for("e2e").input_language == Language::kEn);
  CHECK(mode_for("te2e").steps.size() == 2);
  CHECK(mode_for("MSI").steps.size() == 3);
  CHECK(mode_for("k2k").single_pass());
  CHECK_THROWS_AS(mode_for("k2x"), std::invalid_argument);
}

TEST_CASE("subsets map to report columns") {
  CHECK(ReportColumn(Subset::kKsmCsat) == "KSM");
  CHECK(ReportColumn(Subset::kKsmKmo) == "KSM");
  CHECK(ReportColumn(Subset::kOmniMath) == "Omni-MATH");
  CHECK(ParseSubset("KSM-TQ") == Subset::kKsmTq);
  CHECK(ParseSubset("ksm") == std::nullopt);
  CHECK(ReportColumnOrder().front() == "GSM8K");
}

TEST_CASE("sampling bounds") {
  SamplingConfig s;
  CHECK_NOTHROW(s.Validate());
  s.top_p = 0.0;
  CHECK_THROWS_AS(s.Validate(), std::invalid_argument);
  s = {};
  s.min_tokens = 10;
  s.max_tokens = 5;
  CHECK_THROWS_AS(s.Validate(), std::invalid_argument);
  s = {};
  s.temperature = -1;
  CHECK_THROWS_AS(s.Validate(), std::invalid_argument);
  s = {};
  s.seed = 42;
  CHECK(json(s).get<SamplingConfig>() == s);
}

TEST_CASE("inference records round trip through json") {
  InferenceRecord r;
  r.problem_id = "x";
  r.subset = Subset::kKsmKms;
  r.mode = ModeName::kTE2E;
  r.step_index = 1;
  r.prompt_text = "p";
  r.raw_output = "\\boxed{3/4}";
  r.usage = {10, 20};
  r.extracted = ExtractedAnswer{"3/4", AnswerKind::kNumeric,
                                Rational(3) / Rational(4), std::nullopt};
  r.verdict = Verdict::kCorrect;
  r.scored = true;
  CHECK(json(r).get<InferenceRecord>() == r);
}

TEST_CASE("sha256") {
  CHECK(Sha256Hex("abc") ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

}  // namespace
}  // namespace bimath
