#pragma once

#include <array>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "faultlens/llm.hpp"
#include "faultlens/sbfl.hpp"
#include "faultlens/scoring.hpp"
#include "faultlens/spectra.hpp"
#include "faultlens/stats.hpp"

namespace faultlens {

inline constexpr double kUnranked = std::numeric_limits<double>::infinity();

/// Rank of each line for one program under one technique or prompt variant.
struct RankAssignment {
  std::string program_id;
  std::string technique_label;
  std::map<LineIndex, double> line_rank;

  /// Keeps the tie-averaged ranks.
  static RankAssignment from_ranking(const SuspiciousnessRanking& ranking);
  /// The i-th parsed entry gets rank i (1-based); no ties.
  static RankAssignment from_answer(const ParsedAnswer& answer, std::string technique_label);
};

struct TopKOutcome {
  bool hit = false;
  double best_rank = kUnranked;
};

/// Best-case Top-K: the best rank among faulty lines and omission alternates
/// present in the assignment. Throws Error(kInvalidArgument) for k < 1.
TopKOutcome top_k(const RankAssignment& assignment, const GroundTruth& truth, int k);

struct TopKResult {
  std::string technique_label;
  int k = 1;
  int hits = 0;
  std::map<std::string, double> per_program;  // best rank, kUnranked if absent
};

/// Top-K over every assignment whose program has ground truth in `corpus`.
TopKResult summarize_top_k(std::string technique_label,
                           const std::vector<RankAssignment>& assignments, const Corpus& corpus,
                           int k);

/// Mean over hit lines of the best score against that line's references. A
/// parsed line hits when it is a faulty line with references, or an omission
/// alternate of one. Throws Error(kNoHitLines) when nothing hits.
double score_explanations(const ParsedAnswer& parsed, const GroundTruth& truth,
                          ExplanationScorer& scorer);

enum class ErrorCategory { kRuntimeError, kOutputError };

std::string_view to_string(ErrorCategory category);

/// RuntimeError iff some failing result aborted with an error record.
/// Throws Error(kNoFailingTests).
ErrorCategory categorize_error(const ProgramSpectrum& spectrum);

// ---------------------------------------------------------------------------
// Report

struct LabeledAssignments {
  std::string label;
  std::vector<RankAssignment> assignments;
};

struct LabeledAnswers {
  std::string label;
  std::vector<ParsedAnswer> answers;
};

struct TechniqueSummary {
  std::string label;
  std::array<int, 3> top_hits{};               // Top-1, Top-2, Top-3
  std::map<std::string, double> best_rank;     // kUnranked when absent
};

struct Comparison {
  std::string a;
  std::string b;
  std::optional<WilcoxonResult> wilcoxon;
  std::string wilcoxon_note;  // error kind when the test is undefined
  std::optional<EffectSize> effect;
  std::string effect_note;
};

struct ExplanationSummary {
  std::string label;
  std::string scorer;
  int scored = 0;
  int skipped = 0;  // programs without a hit line
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  std::map<std::string, double> per_program;
};

struct CategoryBreakdown {
  std::string label;
  int k = 3;
  int runtime_hits = 0;
  int runtime_misses = 0;
  int output_hits = 0;
  int output_misses = 0;
};

struct LocalizationReport {
  double alpha = 0.01;
  std::vector<std::string> program_ids;  // programs with ground truth
  std::vector<TechniqueSummary> techniques;
  std::vector<Comparison> comparisons;
  std::vector<ExplanationSummary> explanations;
  std::map<std::string, ErrorCategory> categories;
  std::vector<CategoryBreakdown> breakdowns;
};

/// Assembles Top-1/2/3 tables, pairwise statistics on per-program best ranks
/// (absent truth lines count as #executable lines + 1), explanation scores
/// and the Runtime/Output breakdown at Top-1 and Top-3.
/// Throws Error(kIncompleteCoverage) when a label lacks a program with truth.
LocalizationReport build_report(const Corpus& corpus, const std::vector<LabeledAssignments>& assignments,
                                const std::vector<LabeledAnswers>& answers,
                                ExplanationScorer& scorer, double alpha = 0.01);

/// Heading for a technique label or prompt-variant slug.
std::string display_label(std::string_view label);

nlohmann::json to_json(const LocalizationReport& report);
LocalizationReport report_from_json(const nlohmann::json& j);
std::string render_text(const LocalizationReport& report);

}  // namespace faultlens
