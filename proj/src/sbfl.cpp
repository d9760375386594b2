#include "faultlens/sbfl.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include "faultlens/error.hpp"

namespace faultlens {

using nlohmann::json;

std::string_view label(Technique technique) {
  switch (technique) {
    case Technique::kTarantula: return "tarantula";
    case Technique::kOchiai: return "ochiai";
    case Technique::kOP2: return "op2";
    case Technique::kBarinel: return "barinel";
    case Technique::kDStar: return "dstar";
  }
  return "unknown";
}

std::optional<Technique> parse_technique(std::string_view name) {
  std::string lowered(name);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  for (Technique t : kAllTechniques) {
    if (label(t) == lowered) return t;
  }
  return std::nullopt;
}

std::map<LineIndex, double> SuspiciousnessRanking::rank_by_line() const {
  std::map<LineIndex, double> out;
  for (const auto& e : entries) out.emplace(e.line, e.rank);
  return out;
}

namespace {

double ratio(double num, double den) { return den == 0.0 ? 0.0 : num / den; }

}  // namespace

double score(Technique technique, const SpectrumCounts& c) {
  const double nf = c.n_f;
  const double np = c.n_p;
  const double nfl = c.n_f_l;
  const double npl = c.n_p_l;
  switch (technique) {
    case Technique::kTarantula: {
      const double fail_ratio = ratio(nfl, nf);
      const double pass_ratio = ratio(npl, np);  // no passing tests: no passing evidence
      return ratio(fail_ratio, fail_ratio + pass_ratio);
    }
    case Technique::kOchiai:
      return ratio(nfl, std::sqrt(nf * (npl + nfl)));
    case Technique::kOP2:
      return nfl - npl / (np + 1.0);
    case Technique::kBarinel:
      return npl + nfl == 0.0 ? 0.0 : 1.0 - npl / (npl + nfl);
    case Technique::kDStar: {
      const double den = npl + (nf - nfl);
      if (den == 0.0) return nfl > 0.0 ? nf * nf + 1.0 : 0.0;
      return nfl * nfl / den;
    }
  }
  return 0.0;
}

SuspiciousnessRanking rank_scores(std::string program_id, std::string technique_label,
                                  std::vector<std::pair<LineIndex, double>> scores) {
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });

  SuspiciousnessRanking ranking{std::move(program_id), std::move(technique_label), {}, false};
  ranking.entries.reserve(scores.size());
  auto same_score = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
  };

  std::size_t begin = 0;
  while (begin < scores.size()) {
    std::size_t end = begin + 1;
    while (end < scores.size() && same_score(scores[begin].second, scores[end].second)) ++end;
    std::sort(scores.begin() + begin, scores.begin() + end,
              [](const auto& a, const auto& b) { return a.first < b.first; });
    // Positions begin+1 .. end share their mean.
    const double block_rank = (static_cast<double>(begin + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t i = begin; i < end; ++i) {
      ranking.entries.push_back({scores[i].first, scores[i].second, block_rank});
    }
    begin = end;
  }
  return ranking;
}

SuspiciousnessRanking rank(const ProgramSpectrum& spectrum, Technique technique) {
  if (spectrum.executable_lines.empty() || spectrum.results.empty()) {
    throw Error(ErrorKind::kEmptySpectrum, spectrum.program_id);
  }
  std::vector<std::pair<LineIndex, double>> scores;
  scores.reserve(spectrum.executable_lines.size());
  for (LineIndex line : spectrum.executable_lines) {
    scores.emplace_back(line, score(technique, counts_for_line(spectrum, line)));
  }
  return rank_scores(spectrum.program_id, std::string(label(technique)), std::move(scores));
}

std::vector<std::pair<LineIndex, double>> top_suspicious(const SuspiciousnessRanking& ranking,
                                                         int k) {
  if (k < 1) throw Error(ErrorKind::kInvalidArgument, "k must be positive");
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(k), ranking.entries.size());
  std::vector<std::pair<LineIndex, double>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(ranking.entries[i].line, ranking.entries[i].score);
  return out;
}

json to_json(const SuspiciousnessRanking& ranking) {
  json entries = json::array();
  for (const auto& e : ranking.entries) {
    entries.push_back({{"line", e.line}, {"score", e.score}, {"rank", e.rank}});
  }
  json j = {{"program_id", ranking.program_id},
            {"technique", ranking.technique_label},
            {"entries", std::move(entries)}};
  if (ranking.fallback) j["fallback"] = "ochiai";
  return j;
}

SuspiciousnessRanking ranking_from_json(const json& j) {
  try {
    SuspiciousnessRanking r;
    r.program_id = j.at("program_id").get<std::string>();
    r.technique_label = j.at("technique").get<std::string>();
    for (const auto& je : j.at("entries")) {
      r.entries.push_back(
          {je.at("line").get<LineIndex>(), je.at("score").get<double>(), je.at("rank").get<double>()});
    }
    r.fallback = j.contains("fallback");
    return r;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("ranking: ") + e.what());
  }
}

}  // namespace faultlens
