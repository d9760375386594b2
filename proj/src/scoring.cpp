#include "faultlens/scoring.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>

#include <nlohmann/json.hpp>

#include "faultlens/error.hpp"

namespace faultlens {

using nlohmann::json;

std::vector<double> ExplanationScorer::score_batch(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  std::vector<double> out;
  out.reserve(pairs.size());
  for (const auto& [candidate, reference] : pairs) out.push_back(score(candidate, reference));
  return out;
}

std::vector<std::string> LexicalScorer::tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      current += static_cast<char>(std::tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

double LexicalScorer::score(const std::string& candidate, const std::string& reference) {
  const auto cand = tokenize(candidate);
  const auto ref = tokenize(reference);
  if (cand.empty() && ref.empty()) return 1.0;
  if (cand.empty() || ref.empty()) return 0.0;

  std::map<std::string, int> ref_counts;
  for (const auto& t : ref) ++ref_counts[t];
  int overlap = 0;
  for (const auto& t : cand) {
    auto it = ref_counts.find(t);
    if (it != ref_counts.end() && it->second > 0) {
      ++overlap;
      --it->second;
    }
  }
  if (overlap == 0) return 0.0;
  const double precision = static_cast<double>(overlap) / static_cast<double>(cand.size());
  const double recall = static_cast<double>(overlap) / static_cast<double>(ref.size());
  return std::clamp(2.0 * precision * recall / (precision + recall), 0.0, 1.0);
}

double RemoteScorer::score(const std::string& candidate, const std::string& reference) {
  return score_batch({{candidate, reference}}).front();
}

std::vector<double> RemoteScorer::score_batch(
    const std::vector<std::pair<std::string, std::string>>& pairs) {
  if (pairs.empty()) return {};
  json body = {{"pairs", json::array()}};
  for (const auto& [candidate, reference] : pairs) {
    body["pairs"].push_back({{"candidate", candidate}, {"reference", reference}});
  }
  const HttpResponse reply =
      transport_->post({url_, {{"Content-Type", "application/json"}}, body.dump()});
  if (reply.status < 200 || reply.status >= 300) {
    throw Error(ErrorKind::kNetworkError,
                "scorer " + url_ + " returned " + std::to_string(reply.status));
  }
  std::vector<double> scores;
  try {
    scores = json::parse(reply.body).at("scores").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kSchemaViolation, std::string("scorer response: ") + e.what());
  }
  if (scores.size() != pairs.size()) {
    throw Error(ErrorKind::kSchemaViolation,
                "scorer returned " + std::to_string(scores.size()) + " scores for " +
                    std::to_string(pairs.size()) + " pairs");
  }
  for (double& s : scores) s = std::isnan(s) ? 0.0 : std::clamp(s, 0.0, 1.0);
  return scores;
}

}  // namespace faultlens
