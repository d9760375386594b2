#include "faultlens/eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "faultlens/error.hpp"
#include "faultlens/ml_localizer.hpp"
#include "faultlens/prompt.hpp"

namespace faultlens {

using nlohmann::json;

RankAssignment RankAssignment::from_ranking(const SuspiciousnessRanking& ranking) {
  return {ranking.program_id, ranking.technique_label, ranking.rank_by_line()};
}

RankAssignment RankAssignment::from_answer(const ParsedAnswer& answer, std::string technique_label) {
  RankAssignment out{answer.program_id, std::move(technique_label), {}};
  for (std::size_t i = 0; i < answer.ranked_lines.size(); ++i) {
    out.line_rank.emplace(answer.ranked_lines[i].line, static_cast<double>(i + 1));
  }
  return out;
}

TopKOutcome top_k(const RankAssignment& assignment, const GroundTruth& truth, int k) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "k must be positive");
  TopKOutcome outcome;
  for (LineIndex line : truth.acceptable_lines()) {
    if (auto it = assignment.line_rank.find(line); it != assignment.line_rank.end()) {
      outcome.best_rank = std::min(outcome.best_rank, it->second);
    }
  }
  outcome.hit = outcome.best_rank <= static_cast<double>(k);
  return outcome;
}

TopKResult summarize_top_k(std::string technique_label,
                           const std::vector<RankAssignment>& assignments, const Corpus& corpus,
                           int k) {
  TopKResult result{std::move(technique_label), k, 0, {}};
  for (const auto& assignment : assignments) {
    const CorpusEntry* entry = find_entry(corpus, assignment.program_id);
    if (!entry || !entry->truth) continue;
    const TopKOutcome outcome = top_k(assignment, *entry->truth, k);
    result.per_program[assignment.program_id] = outcome.best_rank;
    if (outcome.hit) ++result.hits;
  }
  return result;
}

double score_explanations(const ParsedAnswer& parsed, const GroundTruth& truth,
                          ExplanationScorer& scorer) {
  auto resolve = [&](LineIndex line) -> std::optional<LineIndex> {
    if (truth.faulty_lines.contains(line)) return line;
    for (const auto& [faulty, alternates] : truth.omission_alternates) {
      if (alternates.contains(line)) return faulty;
    }
    return std::nullopt;
  };

  std::set<LineIndex> scored_lines;
  double total = 0.0;
  for (const auto& entry : parsed.ranked_lines) {
    const auto faulty = resolve(entry.line);
    if (!faulty || scored_lines.contains(*faulty)) continue;
    const auto refs = truth.reference_explanations.find(*faulty);
    if (refs == truth.reference_explanations.end()) continue;

    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& reference : refs->second) pairs.emplace_back(entry.explanation, reference);
    const auto scores = scorer.score_batch(pairs);
    total += *std::max_element(scores.begin(), scores.end());
    scored_lines.insert(*faulty);
  }
  if (scored_lines.empty()) throw Error(ErrorKind::kNoHitLines, parsed.program_id);
  return total / static_cast<double>(scored_lines.size());
}

std::string_view to_string(ErrorCategory category) {
  return category == ErrorCategory::kRuntimeError ? "RuntimeError" : "OutputError";
}

ErrorCategory categorize_error(const ProgramSpectrum& spectrum) {
  bool any_failure = false;
  for (const auto& result : spectrum.results) {
    if (!result.failed()) continue;
    any_failure = true;
    if (result.error) return ErrorCategory::kRuntimeError;
  }
  if (!any_failure) throw Error(ErrorKind::kNoFailingTests, spectrum.program_id);
  return ErrorCategory::kOutputError;
}

// ---------------------------------------------------------------------------
// Report assembly

namespace {

double rank_cap(const CorpusEntry& entry) {
  const auto lines = entry.spectrum ? entry.spectrum->executable_lines.size()
                                    : static_cast<std::size_t>(entry.program.line_count());
  return static_cast<double>(lines + 1);
}

std::vector<double> paired_vector(const TechniqueSummary& summary, const Corpus& corpus,
                                  const std::vector<std::string>& program_ids) {
  std::vector<double> out;
  for (const auto& id : program_ids) {
    const double best = summary.best_rank.at(id);
    out.push_back(std::isinf(best) ? rank_cap(*find_entry(corpus, id)) : best);
  }
  return out;
}

Comparison compare(const TechniqueSummary& a, const TechniqueSummary& b, const Corpus& corpus,
                   const std::vector<std::string>& program_ids, double alpha) {
  Comparison c{a.label, b.label, std::nullopt, "", std::nullopt, ""};
  const auto va = paired_vector(a, corpus, program_ids);
  const auto vb = paired_vector(b, corpus, program_ids);
  try {
    c.wilcoxon = wilcoxon_signed_rank(va, vb, alpha);
  } catch (const Error& e) {
    c.wilcoxon_note = e.what();
  }
  try {
    c.effect = cohens_d(va, vb);
  } catch (const Error& e) {
    if (va == vb) {
      c.effect = EffectSize{0.0, EffectLabel::kNegligible};
    } else {
      c.effect_note = e.what();
    }
  }
  return c;
}

}  // namespace

LocalizationReport build_report(const Corpus& corpus,
                                const std::vector<LabeledAssignments>& assignments,
                                const std::vector<LabeledAnswers>& answers,
                                ExplanationScorer& scorer, double alpha) {
  LocalizationReport report;
  report.alpha = alpha;
  for (const auto& entry : corpus) {
    if (entry.truth) report.program_ids.push_back(entry.program.id);
  }

  for (const auto& labeled : assignments) {
    TechniqueSummary summary;
    summary.label = labeled.label;
    std::map<std::string, const RankAssignment*> by_program;
    for (const auto& a : labeled.assignments) by_program[a.program_id] = &a;

    std::vector<std::string> missing;
    for (const auto& id : report.program_ids) {
      if (!by_program.contains(id)) missing.push_back(id);
    }
    if (!missing.empty()) {
      throw Error(ErrorKind::kIncompleteCoverage,
                  fmt::format("{} lacks {}", labeled.label, fmt::join(missing, ", ")));
    }

    for (const auto& id : report.program_ids) {
      const GroundTruth& truth = *find_entry(corpus, id)->truth;
      const TopKOutcome outcome = top_k(*by_program.at(id), truth, 1);
      summary.best_rank[id] = outcome.best_rank;
      for (int k = 1; k <= 3; ++k) {
        if (outcome.best_rank <= k) ++summary.top_hits[static_cast<std::size_t>(k - 1)];
      }
    }
    report.techniques.push_back(std::move(summary));
  }

  for (std::size_t i = 0; i < report.techniques.size(); ++i) {
    for (std::size_t j = i + 1; j < report.techniques.size(); ++j) {
      report.comparisons.push_back(
          compare(report.techniques[i], report.techniques[j], corpus, report.program_ids, alpha));
    }
  }

  for (const auto& labeled : answers) {
    ExplanationSummary summary;
    summary.label = labeled.label;
    summary.scorer = scorer.name();
    std::vector<const ParsedAnswer*> ordered;
    for (const auto& a : labeled.answers) ordered.push_back(&a);
    std::sort(ordered.begin(), ordered.end(),
              [](const ParsedAnswer* x, const ParsedAnswer* y) { return x->program_id < y->program_id; });
    for (const ParsedAnswer* answer : ordered) {
      const CorpusEntry* entry = find_entry(corpus, answer->program_id);
      if (!entry || !entry->truth) continue;
      try {
        summary.per_program[answer->program_id] = score_explanations(*answer, *entry->truth, scorer);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kNoHitLines) throw;
        ++summary.skipped;
      }
    }
    summary.scored = static_cast<int>(summary.per_program.size());
    if (summary.scored > 0) {
      double total = 0.0;
      summary.min = 1.0;
      summary.max = 0.0;
      for (const auto& [id, value] : summary.per_program) {
        total += value;
        summary.min = std::min(summary.min, value);
        summary.max = std::max(summary.max, value);
      }
      summary.mean = total / summary.scored;
    }
    report.explanations.push_back(std::move(summary));
  }

  for (const auto& id : report.program_ids) {
    const CorpusEntry* entry = find_entry(corpus, id);
    if (entry->spectrum) report.categories[id] = categorize_error(*entry->spectrum);
  }
  for (int k : {1, 3}) {
    for (const auto& summary : report.techniques) {
      CategoryBreakdown b{summary.label, k, 0, 0, 0, 0};
      for (const auto& [id, category] : report.categories) {
        const bool hit = summary.best_rank.at(id) <= k;
        if (category == ErrorCategory::kRuntimeError) {
          (hit ? b.runtime_hits : b.runtime_misses)++;
        } else {
          (hit ? b.output_hits : b.output_misses)++;
        }
      }
      report.breakdowns.push_back(b);
    }
  }
  return report;
}

std::string display_label(std::string_view label) {
  if (auto technique = parse_technique(label)) {
    switch (*technique) {
      case Technique::kTarantula: return "Tarantula";
      case Technique::kOchiai: return "Ochiai";
      case Technique::kOP2: return "OP2";
      case Technique::kBarinel: return "Barinel";
      case Technique::kDStar: return "DStar";
    }
  }
  if (label == kMlTechniqueLabel) return "XAI4FL-style";
  if (auto variant = parse_variant(label)) return std::string(display_name(*variant));
  return std::string(label);
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

json rank_or_null(double rank) { return std::isinf(rank) ? json(nullptr) : json(rank); }
double rank_from(const json& j) { return j.is_null() ? kUnranked : j.get<double>(); }

}  // namespace

json to_json(const LocalizationReport& report) {
  json techniques = json::array();
  for (const auto& t : report.techniques) {
    json best = json::object();
    for (const auto& [id, rank] : t.best_rank) best[id] = rank_or_null(rank);
    techniques.push_back({{"label", t.label},
                          {"top1", t.top_hits[0]},
                          {"top2", t.top_hits[1]},
                          {"top3", t.top_hits[2]},
                          {"best_rank", std::move(best)}});
  }
  json comparisons = json::array();
  for (const auto& c : report.comparisons) {
    json jc = {{"a", c.a}, {"b", c.b}};
    if (c.wilcoxon) {
      jc["wilcoxon"] = {{"p", c.wilcoxon->p},
                        {"significant", c.wilcoxon->significant},
                        {"n", c.wilcoxon->n},
                        {"w_plus", c.wilcoxon->w_plus},
                        {"exact", c.wilcoxon->exact}};
    } else {
      jc["wilcoxon"] = nullptr;
      jc["wilcoxon_note"] = c.wilcoxon_note;
    }
    if (c.effect) {
      jc["cohens_d"] = {{"d", c.effect->d}, {"label", to_string(c.effect->label)}};
    } else {
      jc["cohens_d"] = nullptr;
      jc["cohens_d_note"] = c.effect_note;
    }
    comparisons.push_back(std::move(jc));
  }
  json explanations = json::array();
  for (const auto& e : report.explanations) {
    explanations.push_back({{"label", e.label},
                            {"scorer", e.scorer},
                            {"scored", e.scored},
                            {"skipped", e.skipped},
                            {"mean", e.mean},
                            {"min", e.min},
                            {"max", e.max},
                            {"per_program", e.per_program}});
  }
  json categories = json::object();
  for (const auto& [id, category] : report.categories) categories[id] = to_string(category);
  json breakdowns = json::array();
  for (const auto& b : report.breakdowns) {
    breakdowns.push_back({{"label", b.label},
                          {"k", b.k},
                          {"runtime_hits", b.runtime_hits},
                          {"runtime_misses", b.runtime_misses},
                          {"output_hits", b.output_hits},
                          {"output_misses", b.output_misses}});
  }
  return {{"alpha", report.alpha},
          {"programs", report.program_ids},
          {"techniques", std::move(techniques)},
          {"comparisons", std::move(comparisons)},
          {"explanations", std::move(explanations)},
          {"error_categories", std::move(categories)},
          {"error_breakdown", std::move(breakdowns)}};
}

LocalizationReport report_from_json(const json& j) {
  try {
    LocalizationReport report;
    report.alpha = j.at("alpha").get<double>();
    report.program_ids = j.at("programs").get<std::vector<std::string>>();
    for (const auto& jt : j.at("techniques")) {
      TechniqueSummary t;
      t.label = jt.at("label").get<std::string>();
      t.top_hits = {jt.at("top1").get<int>(), jt.at("top2").get<int>(), jt.at("top3").get<int>()};
      for (const auto& [id, rank] : jt.at("best_rank").items()) t.best_rank[id] = rank_from(rank);
      report.techniques.push_back(std::move(t));
    }
    for (const auto& jc : j.at("comparisons")) {
      Comparison c;
      c.a = jc.at("a").get<std::string>();
      c.b = jc.at("b").get<std::string>();
      if (!jc.at("wilcoxon").is_null()) {
        const auto& w = jc.at("wilcoxon");
        c.wilcoxon = WilcoxonResult{w.at("p").get<double>(), w.at("significant").get<bool>(),
                                    w.at("n").get<int>(), w.at("w_plus").get<double>(),
                                    w.at("exact").get<bool>()};
      } else {
        c.wilcoxon_note = jc.value("wilcoxon_note", "");
      }
      if (!jc.at("cohens_d").is_null()) {
        const double d = jc.at("cohens_d").at("d").get<double>();
        c.effect = EffectSize{d, effect_label(d)};
      } else {
        c.effect_note = jc.value("cohens_d_note", "");
      }
      report.comparisons.push_back(std::move(c));
    }
    for (const auto& je : j.at("explanations")) {
      ExplanationSummary e;
      e.label = je.at("label").get<std::string>();
      e.scorer = je.at("scorer").get<std::string>();
      e.scored = je.at("scored").get<int>();
      e.skipped = je.at("skipped").get<int>();
      e.mean = je.at("mean").get<double>();
      e.min = je.at("min").get<double>();
      e.max = je.at("max").get<double>();
      e.per_program = je.at("per_program").get<std::map<std::string, double>>();
      report.explanations.push_back(std::move(e));
    }
    for (const auto& [id, name] : j.at("error_categories").items()) {
      report.categories[id] = name.get<std::string>() == "RuntimeError" ? ErrorCategory::kRuntimeError
                                                                        : ErrorCategory::kOutputError;
    }
    for (const auto& jb : j.at("error_breakdown")) {
      report.breakdowns.push_back({jb.at("label").get<std::string>(), jb.at("k").get<int>(),
                                   jb.at("runtime_hits").get<int>(),
                                   jb.at("runtime_misses").get<int>(),
                                   jb.at("output_hits").get<int>(),
                                   jb.at("output_misses").get<int>()});
    }
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("report: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Text rendering

std::string render_text(const LocalizationReport& report) {
  std::string out;
  out += fmt::format("Top-K localization ({} programs with ground truth, best-case)\n\n",
                     report.program_ids.size());

  std::size_t width = 9;
  for (const auto& t : report.techniques) width = std::max(width, display_label(t.label).size());
  out += fmt::format("{:<{}} | {:>5} | {:>5} | {:>5}\n", "Technique", width, "Top-1", "Top-2",
                     "Top-3");
  out += std::string(width + 24, '-') + "\n";
  for (const auto& t : report.techniques) {
    out += fmt::format("{:<{}} | {:>5} | {:>5} | {:>5}\n", display_label(t.label), width,
                       t.top_hits[0], t.top_hits[1], t.top_hits[2]);
  }

  if (!report.comparisons.empty()) {
    out += fmt::format(
        "\nPairwise comparisons (Wilcoxon signed-rank on per-program best ranks; "
        "* marks p < {})\n",
        report.alpha);
    for (const auto& c : report.comparisons) {
      std::string wilcoxon = c.wilcoxon
                                 ? fmt::format("p = {:.4f}{}", c.wilcoxon->p,
                                               c.wilcoxon->significant ? "*" : "")
                                 : "p = n/a (" + c.wilcoxon_note + ")";
      std::string effect = c.effect ? fmt::format("d = {:.2f} ({})", c.effect->d,
                                                  to_string(c.effect->label))
                                    : "d = n/a (" + c.effect_note + ")";
      out += fmt::format("  {} vs {}: {}; {}\n", display_label(c.a), display_label(c.b), wilcoxon,
                         effect);
    }
  }

  if (!report.explanations.empty()) {
    out += "\nExplanation scores (mean of max-over-references per hit line)\n";
    for (const auto& e : report.explanations) {
      if (e.scored == 0) {
        out += fmt::format("  {}: no hit lines ({} programs skipped)\n", display_label(e.label),
                           e.skipped);
      } else {
        out += fmt::format("  {}: mean {:.4f}, min {:.4f}, max {:.4f} over {} programs ({} "
                           "skipped, scorer {})\n",
                           display_label(e.label), e.mean, e.min, e.max, e.scored, e.skipped,
                           e.scorer);
      }
    }
  }

  if (!report.categories.empty()) {
    int runtime = 0;
    for (const auto& [id, category] : report.categories) {
      if (category == ErrorCategory::kRuntimeError) ++runtime;
    }
    out += fmt::format("\nError categories: {} RuntimeError, {} OutputError\n", runtime,
                       report.categories.size() - static_cast<std::size_t>(runtime));
    for (const auto& b : report.breakdowns) {
      out += fmt::format("  Top-{} {}: RuntimeError {} hit / {} miss, OutputError {} hit / {} miss\n",
                         b.k, display_label(b.label), b.runtime_hits, b.runtime_misses,
                         b.output_hits, b.output_misses);
    }
  }
  return out;
}

}  // namespace faultlens
