#pragma once

#include <vector>

namespace testing_support {

struct ReferencePair {
  std::vector<double> a;
  std::vector<double> b;
  double p;  // scipy.stats.wilcoxon(a, b, zero_method="wilcox", correction=True, method="approx")
  double w_plus;
  int nonzero;
};

// Values frozen from scipy 1.15.3. The last three pairs contain tied
// magnitudes, and the fourth also has zero differences.
inline const std::vector<ReferencePair>& wilcoxon_reference_pairs() {
  static const std::vector<ReferencePair> pairs = {
      {{4.346, 3.051, 5.989, 5.85, 4.118, 4.801, 1.393, 3.235, 5.433, 6.191, 4.982, 3.354, 4.29,
        6.051, 2.267, 7.41, 4.543, 3.39, 2.921, 2.742},
       {7.026, 2.79, 3.815, 5.704, 3.074, 3.189, 8.876, 5.21, 4.753, 9.798, 7.493, 6.653, 7.236,
        6.635, 5.762, 0.824, 6.8, 5.222, 8.544, 7.495},
       0.028965101153413369, 46.0, 20},
      {{2.44, 6.83, 1.5, 6.86, 5.53, 2.63, 5.38, 7.64, 8.87, 4.23, 7.92, 9.03, 0.96, 4.55, 4.38,
        7.63, 5.36, 4.86, 5.11, 3.02},
       {0.44, 5.64, 2.52, 6.28, 3.94, 0.2, 1.77, 5.93, 4.73, 3.78, 6.46, 8.56, 1.0, 6.1, 6.22,
        4.57, 6.77, 5.15, 6.06, 2.01},
       0.059389370830247791, 156.0, 20},
      {{7, 1, 2, 6, 2, 3, 4, 1, 4, 6, 4, 4, 7, 7, 3, 2, 5, 2, 3, 6},
       {2, 7, 5, 4, 5, 6, 2, 3, 1, 5, 6, 5, 4, 3, 4, 1, 2, 6, 7, 4},
       0.85103696592888822, 110.5, 20},
      {{7, 9, 1, 3, 1, 5, 1, 6, 10, 11, 3, 4, 11, 10, 2, 3, 2, 4, 6, 6},
       {7, 11, 3, 4, 0, 7, 0, 6, 12, 13, 3, 6, 10, 12, 3, 2, 3, 6, 8, 7},
       0.0046900312616562478, 18.0, 17},
      {{2.5, 1.0, 8.5, 1.5, 8.5, 2.0, 7.5, 2.5, 2.5, 1.0, 9.0, 1.5, 6.5, 2.0, 1.0, 7.5, 1.5, 5.5,
        4.0, 5.5},
       {2.0, 7.5, 1.5, 9.5, 9.5, 6.5, 5.5, 5.0, 1.0, 2.5, 2.0, 4.0, 8.5, 7.5, 7.5, 9.5, 9.5, 2.5,
        6.5, 2.0},
       0.17850152838613453, 68.5, 20},
  };
  return pairs;
}

}  // namespace testing_support
