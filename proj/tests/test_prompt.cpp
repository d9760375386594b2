#include <gtest/gtest.h>

#include "faultlens/error.hpp"
#include "faultlens/prompt.hpp"
#include "faultlens/sbfl.hpp"
#include "test_support.hpp"

using namespace faultlens;

namespace {

struct Fixture {
  SubjectProgram program;
  SuspiciousnessRanking ranking;
  std::vector<TestResult> results;
};

Fixture remove_extras() {
  Fixture f;
  f.program = {"remove_extras",
               {"def remove_extras(lst):", "    result = []", "    for x in lst:",
                "        if x in result:", "            result.append(x)", "    return result"},
               "Keep the first occurrence of every element.",
               {{"t1", "remove_extras([])", "[]"}, {"t2", "remove_extras([1, 1, 3])", "[1, 3]"}}};
  f.ranking = rank_scores("remove_extras", "ochiai",
                          {{2, 0.7}, {3, 0.7}, {4, 0.8}, {5, 0.0}, {6, 0.7}});
  TestResult pass{"t1", Verdict::kPass, "[]", std::nullopt, {2, 3, 6}};
  TestResult fail{"t2", Verdict::kFail, "[]", std::nullopt, {2, 3, 4, 6}};
  f.results = {pass, fail};
  return f;
}

std::size_t occurrences(const std::string& text, const std::string& needle) {
  std::size_t count = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++count;
  return count;
}

}  // namespace

struct MatrixRow {
  PromptVariant variant;
  bool sbfl, tests, description;
};

class PromptMatrix : public ::testing::TestWithParam<MatrixRow> {};

TEST_P(PromptMatrix, BlockInclusionMatchesVariant) {
  const auto row = GetParam();
  EXPECT_EQ(blocks_for(row.variant), (BlockInclusion{row.sbfl, row.tests, row.description}));
  const auto f = remove_extras();
  const auto bundle = build_prompt(f.program, row.variant, &f.ranking, &f.results);
  EXPECT_EQ(bundle.blocks.count(kSbflBlock) == 1, row.sbfl);
  EXPECT_EQ(bundle.blocks.count(kTestBlock) == 1, row.tests);
  EXPECT_EQ(bundle.blocks.count(kDescriptionBlock) == 1, row.description);
  EXPECT_EQ(bundle.text.find("Suspiciousness scores") != std::string::npos, row.sbfl);
  EXPECT_EQ(bundle.text.find("Failing test results") != std::string::npos, row.tests);
  EXPECT_EQ(bundle.text.find("Code description:") != std::string::npos, row.description);
  EXPECT_EQ(bundle.text.find("step-by-step") != std::string::npos,
            row.variant != PromptVariant::kBaseline);
  EXPECT_GE(bundle.approx_tokens, 1);
}

INSTANTIATE_TEST_SUITE_P(
    AllVariants, PromptMatrix,
    ::testing::Values(MatrixRow{PromptVariant::kBaseline, false, false, false},
                      MatrixRow{PromptVariant::kCoT, false, false, false},
                      MatrixRow{PromptVariant::kTestRes, false, true, false},
                      MatrixRow{PromptVariant::kSusScore, true, false, false},
                      MatrixRow{PromptVariant::kCodeDesc, false, false, true},
                      MatrixRow{PromptVariant::kSusScoreTestRes, true, true, false},
                      MatrixRow{PromptVariant::kTestResCodeDesc, false, true, true},
                      MatrixRow{PromptVariant::kSusScoreCodeDesc, true, false, true},
                      MatrixRow{PromptVariant::kFuseFL, true, true, true}));

TEST(BuildPrompt, FuseFLListsEveryLineOnce) {
  const auto f = remove_extras();
  const auto bundle = build_prompt(f.program, PromptVariant::kFuseFL, &f.ranking, &f.results);
  for (int i = 0; i < f.program.line_count(); ++i) {
    const std::string numbered = std::to_string(i + 1) + ": " + f.program.source_lines[i] + "\n";
    EXPECT_EQ(occurrences(bundle.text, numbered), 1u) << numbered;
  }
}

TEST(BuildPrompt, TestBlockShowsInputAndExpected) {
  const auto f = remove_extras();
  const auto bundle = build_prompt(f.program, PromptVariant::kTestRes, nullptr, &f.results);
  const auto& block = bundle.blocks.at(kTestBlock);
  EXPECT_NE(block.find("remove_extras([1, 1, 3])"), std::string::npos);
  EXPECT_NE(block.find("Expected output: [1, 3]"), std::string::npos);
  EXPECT_NE(block.find("Actual output: []"), std::string::npos);
  // Passing tests are not listed.
  EXPECT_EQ(block.find("remove_extras([])"), std::string::npos);
}

TEST(BuildPrompt, RuntimeErrorsNameKindAndLine) {
  auto f = remove_extras();
  f.results[1].actual_repr.reset();
  f.results[1].error = ExecutionError{"IndexError", 4};
  const auto bundle = build_prompt(f.program, PromptVariant::kTestRes, nullptr, &f.results);
  EXPECT_NE(bundle.blocks.at(kTestBlock).find("Error: IndexError raised at line 4"), std::string::npos);
}

TEST(BuildPrompt, SbflBlockListsTopLinesWithTies) {
  const auto f = remove_extras();
  PromptOptions options;
  options.top_n = 3;
  const auto bundle = build_prompt(f.program, PromptVariant::kSusScore, &f.ranking, nullptr,
                                   TemplateSet::defaults(), options);
  const auto& block = bundle.blocks.at(kSbflBlock);
  EXPECT_NE(block.find("(Ochiai), the 3 most"), std::string::npos);
  EXPECT_NE(block.find("Line 4 (score 0.8000)\nLine 2 (score 0.7000)\nLine 3 (score 0.7000)\n"),
            std::string::npos);
  EXPECT_EQ(block.find("Line 6"), std::string::npos);
}

TEST(BuildPrompt, MissingInputsAreReported) {
  const auto f = remove_extras();
  try {
    build_prompt(f.program, PromptVariant::kSusScoreTestRes, nullptr, &f.results);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMissingBlockInput);
  }
  EXPECT_THROW(build_prompt(f.program, PromptVariant::kTestRes, &f.ranking, nullptr), Error);
  EXPECT_NO_THROW(build_prompt(f.program, PromptVariant::kCoT, nullptr, nullptr));
}

TEST(BuildPrompt, BaselineUsesPlainInstruction) {
  const auto f = remove_extras();
  const auto baseline = build_prompt(f.program, PromptVariant::kBaseline, nullptr, nullptr);
  const auto cot = build_prompt(f.program, PromptVariant::kCoT, nullptr, nullptr);
  EXPECT_NE(baseline.text, cot.text);
  EXPECT_NE(baseline.text.find("Line <n>: <reason>"), std::string::npos);
  EXPECT_NE(cot.text.find("Line <n>: <step-by-step reasoning>"), std::string::npos);
}

TEST(BuildPrompt, PureFunctionOfInputs) {
  const auto f = remove_extras();
  for (PromptVariant v : kAllVariants) {
    EXPECT_EQ(build_prompt(f.program, v, &f.ranking, &f.results),
              build_prompt(f.program, v, &f.ranking, &f.results));
  }
}

TEST(DescriptionPrompt, ContainsSourceAndAsserts) {
  auto f = remove_extras();
  f.program.test_cases.resize(1);
  f.program.test_cases[0] = {"t1", "remove_extras([1, 1, 3])", "[1, 3]"};
  const auto text = build_description_prompt(f.program);
  EXPECT_NE(text.find("def remove_extras(lst):\n    result = []"), std::string::npos);
  EXPECT_NE(text.find("assert remove_extras([1, 1, 3]) == [1, 3]"), std::string::npos);
  EXPECT_EQ(text, build_description_prompt(f.program));
  f.program.test_cases.clear();
  EXPECT_THROW(build_description_prompt(f.program), Error);
}

TEST(EstimateTokens, Segmentation) {
  EXPECT_EQ(estimate_tokens(""), 0);
  EXPECT_EQ(estimate_tokens("a b c"), 3);
  EXPECT_EQ(estimate_tokens("foo(bar_baz, 12)"), 6);
  EXPECT_EQ(estimate_tokens("  \n\t "), 0);
  std::string text;
  int previous = 0;
  for (char c : std::string("x = lst[i] + 1 # done")) {
    text += c;
    const int now = estimate_tokens(text);
    EXPECT_GE(now, previous);
    previous = now;
  }
}

TEST(RenderTemplate, SinglePassSubstitution) {
  EXPECT_EQ(render_template("{a}-{b}-{c}", {{"a", "{b}"}, {"b", "2"}}), "{b}-2-{c}");
  EXPECT_EQ(render_template("{unclosed", {{"unclosed", "x"}}), "{unclosed");
}

TEST(Templates, ShippedFilesMatchDefaults) {
  EXPECT_EQ(TemplateSet::load(testing_support::templates_dir()), TemplateSet::defaults());
}

TEST(Templates, OverrideFromDirectory) {
  testing_support::TempDir dir("templates");
  write_text_file(dir.path() / "instruction_cot.txt", "Think. Answer as Line <n>: <why>\n\n");
  const auto t = TemplateSet::load(dir.path());
  EXPECT_EQ(t.step_by_step_instruction, "Think. Answer as Line <n>: <why>");
  EXPECT_EQ(t.prompt, TemplateSet::defaults().prompt);
}

TEST(Variant, NamesRoundTrip) {
  for (PromptVariant v : kAllVariants) {
    EXPECT_EQ(parse_variant(slug(v)), v);
    EXPECT_EQ(parse_variant(display_name(v)), v);
  }
  EXPECT_FALSE(parse_variant("everything"));
}

TEST(Bundle, JsonRoundTrip) {
  const auto f = remove_extras();
  const auto bundle = build_prompt(f.program, PromptVariant::kFuseFL, &f.ranking, &f.results);
  EXPECT_EQ(prompt_bundle_from_json(to_json(bundle)), bundle);
}
