#include "faultlens/ml_localizer.hpp"

#include <numeric>

#include "faultlens/error.hpp"

namespace faultlens {

namespace {

double gini(int samples, int failing) {
  if (samples == 0) return 0.0;
  const double p = static_cast<double>(failing) / samples;
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

constexpr double kMinGain = 1e-12;

}  // namespace

SpectraTable SpectraTable::from_spectrum(const ProgramSpectrum& spectrum) {
  SpectraTable table;
  table.columns.assign(spectrum.executable_lines.begin(), spectrum.executable_lines.end());
  for (const auto& result : spectrum.results) {
    std::vector<std::uint8_t> row(table.columns.size(), 0);
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
      row[c] = result.covered_lines.contains(table.columns[c]) ? 1 : 0;
    }
    table.rows.push_back(std::move(row));
    table.failed.push_back(result.failed());
  }
  return table;
}

DecisionTree DecisionTree::fit(const SpectraTable& table, const TreeOptions& options) {
  DecisionTree tree;
  tree.importances_.assign(table.width(), 0.0);
  tree.total_samples_ = static_cast<double>(table.rows.size());
  std::vector<int> all(table.rows.size());
  std::iota(all.begin(), all.end(), 0);
  if (!all.empty()) tree.grow(table, all, 0, options);

  const double total = std::accumulate(tree.importances_.begin(), tree.importances_.end(), 0.0);
  if (total > 0.0) {
    for (double& v : tree.importances_) v /= total;
  }
  return tree;
}

int DecisionTree::grow(const SpectraTable& table, const std::vector<int>& rows, int depth,
                       const TreeOptions& options) {
  Node node;
  node.samples = static_cast<int>(rows.size());
  for (int r : rows) node.failing += table.failed[r] ? 1 : 0;
  node.impurity = gini(node.samples, node.failing);

  const int index = static_cast<int>(nodes_.size());
  nodes_.push_back(node);
  if (depth >= options.max_depth || node.impurity == 0.0) return index;

  // Weighted impurity decrease, as in CART: N_t*i(t) - N_l*i(l) - N_r*i(r).
  int best_feature = -1;
  double best_gain = 0.0;
  for (std::size_t c = 0; c < table.width(); ++c) {
    int right_n = 0;
    int right_fail = 0;
    for (int r : rows) {
      if (table.rows[r][c]) {
        ++right_n;
        right_fail += table.failed[r] ? 1 : 0;
      }
    }
    const int left_n = node.samples - right_n;
    const int left_fail = node.failing - right_fail;
    if (left_n < options.min_samples_leaf || right_n < options.min_samples_leaf) continue;
    const double gain = node.samples * node.impurity - left_n * gini(left_n, left_fail) -
                        right_n * gini(right_n, right_fail);
    if (gain > kMinGain && (best_feature < 0 || gain > best_gain + kMinGain)) {
      best_gain = gain;
      best_feature = static_cast<int>(c);
    }
  }
  if (best_feature < 0) return index;

  std::vector<int> left_rows;
  std::vector<int> right_rows;
  for (int r : rows) (table.rows[r][best_feature] ? right_rows : left_rows).push_back(r);

  importances_[best_feature] += best_gain / total_samples_;
  const int left = grow(table, left_rows, depth + 1, options);
  const int right = grow(table, right_rows, depth + 1, options);
  nodes_[index].feature = best_feature;
  nodes_[index].left = left;
  nodes_[index].right = right;
  return index;
}

SuspiciousnessRanking localize_ml(const ProgramSpectrum& spectrum, const TreeOptions& options) {
  if (spectrum.executable_lines.empty() || spectrum.results.empty()) {
    throw Error(ErrorKind::kEmptySpectrum, spectrum.program_id);
  }
  if (spectrum.failing_count() == 0 || spectrum.passing_count() == 0) {
    SuspiciousnessRanking fallback = rank(spectrum, Technique::kOchiai);
    fallback.technique_label = kMlTechniqueLabel;
    fallback.fallback = true;
    return fallback;
  }

  const SpectraTable table = SpectraTable::from_spectrum(spectrum);
  const DecisionTree tree = DecisionTree::fit(table, options);
  const auto importances = tree.feature_importances();
  std::vector<std::pair<LineIndex, double>> scores;
  scores.reserve(table.width());
  for (std::size_t c = 0; c < table.width(); ++c) scores.emplace_back(table.columns[c], importances[c]);
  return rank_scores(spectrum.program_id, kMlTechniqueLabel, std::move(scores));
}

}  // namespace faultlens
