#pragma once

#include <cstdint>
#include <vector>

#include "faultlens/sbfl.hpp"
#include "faultlens/spectra.hpp"

namespace faultlens {

inline constexpr const char* kMlTechniqueLabel = "xai4fl-style";

/// One row per test: a coverage bit per executable line, labelled by verdict.
struct SpectraTable {
  std::vector<LineIndex> columns;             // ascending executable lines
  std::vector<std::vector<std::uint8_t>> rows;
  std::vector<bool> failed;                   // label per row

  static SpectraTable from_spectrum(const ProgramSpectrum& spectrum);
  std::size_t width() const { return columns.size(); }
};

struct TreeOptions {
  int max_depth = 8;
  int min_samples_leaf = 1;
};

/// Binary CART classifier over 0/1 features with Gini impurity. Equal gains
/// resolve to the lowest column, so training is deterministic.
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for a leaf
    int left = -1;     // rows where the feature is 0
    int right = -1;    // rows where the feature is 1
    int samples = 0;
    int failing = 0;
    double impurity = 0.0;
  };

  static DecisionTree fit(const SpectraTable& table, const TreeOptions& options = {});

  const std::vector<Node>& nodes() const { return nodes_; }

  /// Total impurity decrease per column, normalised to sum to 1 when any split
  /// happened (all zeros otherwise).
  std::vector<double> feature_importances() const { return importances_; }

 private:
  int grow(const SpectraTable& table, const std::vector<int>& rows, int depth,
           const TreeOptions& options);

  std::vector<Node> nodes_;
  std::vector<double> importances_;
  double total_samples_ = 0.0;
};

/// Decision-tree localizer: lines are scored by feature importance. When the
/// spectrum lacks either verdict class the Ochiai ranking is returned instead,
/// relabelled and flagged as a fallback. Throws Error(kEmptySpectrum).
SuspiciousnessRanking localize_ml(const ProgramSpectrum& spectrum, const TreeOptions& options = {});

}  // namespace faultlens
