#include <gtest/gtest.h>

#include <random>

#include "faultlens/error.hpp"
#include "faultlens/eval.hpp"
#include "test_support.hpp"

using namespace faultlens;

namespace {

RankAssignment assignment(std::string program, std::map<LineIndex, double> ranks) {
  return {std::move(program), "t", std::move(ranks)};
}

GroundTruth truth(std::set<LineIndex> faulty, std::map<LineIndex, std::set<LineIndex>> alternates = {}) {
  return {"p", std::move(faulty), std::move(alternates), {}};
}

/// Returns a fixed score per reference text.
class TableScorer : public ExplanationScorer {
 public:
  explicit TableScorer(std::map<std::string, double> table) : table_(std::move(table)) {}
  std::string name() const override { return "table"; }
  double score(const std::string&, const std::string& reference) override { return table_.at(reference); }

 private:
  std::map<std::string, double> table_;
};

ParsedAnswer parsed(std::vector<AnswerEntry> entries) {
  ParsedAnswer a;
  a.program_id = "p";
  a.ranked_lines = std::move(entries);
  return a;
}

ProgramSpectrum spectrum_with(std::vector<TestResult> results) {
  ProgramSpectrum s;
  s.program_id = "p";
  s.executable_lines = {1, 2, 3, 4};
  s.results = std::move(results);
  return s;
}

Corpus single_program_corpus() {
  CorpusEntry e;
  e.program = {"p", {"a", "b", "c"}, "", {{"t1", "f()", "1"}}};
  e.spectrum = spectrum_with({{"t1", Verdict::kFail, "2", std::nullopt, {1, 2}}});
  e.spectrum->executable_lines = {1, 2, 3};
  e.truth = GroundTruth{"p", {2}, {}, {{2, {"wrong constant"}}}};
  return {e};
}

}  // namespace

TEST(TopK, TiedFirstPlaceIsAMiss) {
  const auto a = RankAssignment::from_ranking(rank_scores("p", "ochiai", {{1, 0.9}, {2, 0.9}, {3, 0.5}}));
  const auto outcome = top_k(a, truth({1}), 1);
  EXPECT_FALSE(outcome.hit);
  EXPECT_DOUBLE_EQ(outcome.best_rank, 1.5);
  EXPECT_TRUE(top_k(a, truth({1}), 2).hit);
}

TEST(TopK, BestCaseOverFaultyLines) {
  const auto a = assignment("p", {{2, 4}, {7, 1}, {3, 2}});
  const auto outcome = top_k(a, truth({2, 7}), 1);
  EXPECT_TRUE(outcome.hit);
  EXPECT_DOUBLE_EQ(outcome.best_rank, 1.0);
}

TEST(TopK, AbsentTruthLineNeverHits) {
  const auto a = assignment("p", {{1, 1}, {2, 2}});
  for (int k = 1; k <= 3; ++k) {
    const auto outcome = top_k(a, truth({5}), k);
    EXPECT_FALSE(outcome.hit);
    EXPECT_EQ(outcome.best_rank, kUnranked);
  }
  EXPECT_THROW(top_k(a, truth({1}), 0), Error);
}

TEST(TopK, OmissionAlternateCounts) {
  const auto a = assignment("p", {{3, 1}, {6, 4}});
  EXPECT_TRUE(top_k(a, truth({6}, {{6, {3}}}), 1).hit);
  EXPECT_FALSE(top_k(a, truth({6}), 1).hit);
}

TEST(TopK, MonotoneInKAndAlternatesNeverHurt) {
  std::mt19937 rng(17);
  for (int trial = 0; trial < 1000; ++trial) {
    std::map<LineIndex, double> ranks;
    for (int l = 1; l <= 8; ++l) {
      if (rng() % 4) ranks[l] = 1.0 + (rng() % 16) / 2.0;
    }
    const auto a = assignment("p", ranks);
    const auto t = truth({1 + static_cast<int>(rng() % 8)});
    bool previous = false;
    for (int k = 1; k <= 5; ++k) {
      const bool hit = top_k(a, t, k).hit;
      EXPECT_TRUE(!previous || hit);
      previous = hit;
    }
    auto widened = t;
    widened.omission_alternates[*t.faulty_lines.begin()] = {1 + static_cast<int>(rng() % 8)};
    EXPECT_LE(top_k(a, widened, 1).best_rank, top_k(a, t, 1).best_rank);
  }
}

TEST(FromAnswer, ParsedOrderGivesIntegerRanks) {
  const auto a = RankAssignment::from_answer(parsed({{4, ""}, {2, ""}, {9, ""}}), "fusefl");
  EXPECT_EQ(a.line_rank, (std::map<LineIndex, double>{{4, 1}, {2, 2}, {9, 3}}));
  EXPECT_EQ(a.technique_label, "fusefl");
}

TEST(SummarizeTopK, SingleProgramHitAtRankOne) {
  const Corpus corpus = single_program_corpus();
  const std::vector<RankAssignment> as{assignment("p", {{2, 1}, {1, 2}})};
  for (int k = 1; k <= 3; ++k) EXPECT_EQ(summarize_top_k("t", as, corpus, k).hits, 1);
}

TEST(ScoreExplanations, MaxOverReferences) {
  GroundTruth t{"p", {3}, {}, {{3, {"ref low", "ref high"}}}};
  TableScorer scorer({{"ref low", 0.3}, {"ref high", 0.7}});
  EXPECT_DOUBLE_EQ(score_explanations(parsed({{3, "because"}}), t, scorer), 0.7);
}

TEST(ScoreExplanations, MeanOverHitLines) {
  GroundTruth t{"p", {3, 5}, {}, {{3, {"r3"}}, {5, {"r5"}}}};
  TableScorer scorer({{"r3", 0.4}, {"r5", 0.6}});
  EXPECT_DOUBLE_EQ(score_explanations(parsed({{3, "x"}, {1, "y"}, {5, "z"}}), t, scorer), 0.5);
}

TEST(ScoreExplanations, AlternateScoresAgainstItsFaultyLine) {
  GroundTruth t{"p", {6}, {{6, {3}}}, {{6, {"sort it"}}}};
  LexicalScorer scorer;
  EXPECT_DOUBLE_EQ(score_explanations(parsed({{3, "sort it"}, {6, "unrelated"}}), t, scorer), 1.0);
  try {
    score_explanations(parsed({{1, "nothing"}}), t, scorer);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoHitLines);
  }
}

TEST(CategorizeError, RuntimeAndOutput) {
  EXPECT_EQ(categorize_error(spectrum_with({{"t1", Verdict::kFail, std::nullopt, ExecutionError{"TypeError", 4}, {4}}})),
            ErrorCategory::kRuntimeError);
  EXPECT_EQ(categorize_error(spectrum_with({{"t1", Verdict::kFail, "[2]", std::nullopt, {1}},
                                            {"t2", Verdict::kPass, "[]", std::nullopt, {1}}})),
            ErrorCategory::kOutputError);
  EXPECT_EQ(categorize_error(spectrum_with({{"t1", Verdict::kFail, "[2]", std::nullopt, {1}},
                                            {"t2", Verdict::kFail, std::nullopt, ExecutionError{"Timeout", 2}, {2}}})),
            ErrorCategory::kRuntimeError);
  try {
    categorize_error(spectrum_with({{"t1", Verdict::kPass, "1", std::nullopt, {1}}}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNoFailingTests);
  }
}

TEST(CategorizeError, MiniCorpusMatchesHandLabels) {
  const Corpus corpus = load_corpus(testing_support::mini_manifest());
  const auto labels = read_json_file(testing_support::fixture_dir() / "mini_corpus" / "error_labels.json");
  for (const auto& entry : corpus) {
    EXPECT_EQ(to_string(categorize_error(*entry.spectrum)), labels.at(entry.program.id).get<std::string>())
        << entry.program.id;
  }
}

TEST(BuildReport, IdenticalAssignmentsGiveDegenerateWilcoxonAndZeroEffect) {
  const Corpus corpus = single_program_corpus();
  const std::vector<LabeledAssignments> as{{"ochiai", {assignment("p", {{2, 1}})}},
                                           {"dstar", {assignment("p", {{2, 1}})}}};
  LexicalScorer scorer;
  const auto report = build_report(corpus, as, {}, scorer);
  ASSERT_EQ(report.comparisons.size(), 1u);
  const auto& c = report.comparisons[0];
  EXPECT_FALSE(c.wilcoxon);
  EXPECT_NE(c.wilcoxon_note.find("DegenerateInput"), std::string::npos);
  ASSERT_TRUE(c.effect);
  EXPECT_DOUBLE_EQ(c.effect->d, 0.0);
  EXPECT_EQ(c.effect->label, EffectLabel::kNegligible);
  EXPECT_EQ(report.techniques[0].top_hits, (std::array<int, 3>{1, 1, 1}));
}

TEST(BuildReport, MissingProgramIsIncompleteCoverage) {
  const Corpus corpus = single_program_corpus();
  const std::vector<LabeledAssignments> as{{"ochiai", {assignment("q", {{2, 1}})}}};
  LexicalScorer scorer;
  try {
    build_report(corpus, as, {}, scorer);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kIncompleteCoverage);
  }
}

TEST(BuildReport, UnrankedTruthIsCappedForStatistics) {
  // Ten programs; technique "a" always ranks the truth first, "b" never ranks it.
  Corpus corpus;
  std::vector<RankAssignment> a, b;
  for (int i = 0; i < 10; ++i) {
    CorpusEntry e = single_program_corpus()[0];
    e.program.id = e.spectrum->program_id = e.truth->program_id = "p" + std::to_string(i);
    corpus.push_back(e);
    a.push_back(assignment(e.program.id, {{2, 1}}));
    b.push_back(assignment(e.program.id, {{1, 1}}));
  }
  LexicalScorer scorer;
  const auto report = build_report(corpus, {{"a", a}, {"b", b}}, {}, scorer);
  ASSERT_TRUE(report.comparisons[0].wilcoxon);
  EXPECT_EQ(report.comparisons[0].wilcoxon->n, 10);
  EXPECT_TRUE(report.comparisons[0].wilcoxon->significant);
  EXPECT_EQ(report.techniques[1].best_rank.at("p0"), kUnranked);
}

TEST(Report, JsonRoundTripAndRendering) {
  const Corpus corpus = single_program_corpus();
  const std::vector<LabeledAssignments> as{{"ochiai", {assignment("p", {{1, 1}, {2, 2}})}},
                                           {"fusefl", {assignment("p", {{2, 1}})}}};
  LabeledAnswers answers{"fusefl", {parsed({{2, "wrong constant"}})}};
  LexicalScorer scorer;
  const auto report = build_report(corpus, as, {answers}, scorer);
  const auto text = render_text(report);
  EXPECT_EQ(render_text(report_from_json(to_json(report))), text);
  EXPECT_EQ(to_json(report_from_json(to_json(report))).dump(), to_json(report).dump());
  EXPECT_NE(text.find("FuseFL"), std::string::npos);
  EXPECT_NE(text.find("Ochiai"), std::string::npos);
  ASSERT_EQ(report.explanations.size(), 1u);
  EXPECT_DOUBLE_EQ(report.explanations[0].mean, 1.0);
}
