#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "faultlens/spectra.hpp"

namespace faultlens {

enum class Technique { kTarantula, kOchiai, kOP2, kBarinel, kDStar };

inline constexpr std::array<Technique, 5> kAllTechniques = {
    Technique::kTarantula, Technique::kOchiai, Technique::kOP2, Technique::kBarinel,
    Technique::kDStar};

/// Lower-case label used in files and on the command line ("ochiai", ...).
std::string_view label(Technique technique);
std::optional<Technique> parse_technique(std::string_view name);

struct RankedLine {
  LineIndex line = 0;
  double score = 0.0;
  double rank = 0.0;  // tie-averaged, 1-based

  bool operator==(const RankedLine&) const = default;
};

/// Lines sorted by descending score. Lines with equal scores form one tie
/// block and share the mean of the positions the block occupies; inside a
/// block entries are ordered by line number.
struct SuspiciousnessRanking {
  std::string program_id;
  std::string technique_label;
  std::vector<RankedLine> entries;
  bool fallback = false;  // set when a model-based localizer fell back to Ochiai

  std::map<LineIndex, double> rank_by_line() const;
  bool operator==(const SuspiciousnessRanking&) const = default;
};

/// Suspiciousness of one line. Total: a zero denominator yields 0, except
/// DStar, which yields n_f^2 + 1 (above every finite DStar value for the same
/// n_f) when a line is covered by every failing test and no passing test.
double score(Technique technique, const SpectrumCounts& c);

/// Sorts (line, score) pairs into a tie-averaged ranking.
SuspiciousnessRanking rank_scores(std::string program_id, std::string technique_label,
                                  std::vector<std::pair<LineIndex, double>> scores);

/// Scores every executable line and ranks them. Throws Error(kEmptySpectrum)
/// if the spectrum has no executable lines or no results.
SuspiciousnessRanking rank(const ProgramSpectrum& spectrum, Technique technique);

/// The first min(k, n) entries.
std::vector<std::pair<LineIndex, double>> top_suspicious(const SuspiciousnessRanking& ranking,
                                                         int k);

nlohmann::json to_json(const SuspiciousnessRanking& ranking);
SuspiciousnessRanking ranking_from_json(const nlohmann::json& j);

}  // namespace faultlens
