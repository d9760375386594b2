#pragma once

#include <span>
#include <string_view>

namespace faultlens {

enum class WilcoxonMethod {
  kAuto,    // exact when at most 12 non-zero differences remain, normal otherwise
  kExact,   // enumerate all 2^n sign assignments (n <= 25)
  kNormal,  // normal approximation with tie and continuity correction
};

inline constexpr int kExactWilcoxonLimit = 12;

struct WilcoxonResult {
  double p = 1.0;            // two-sided
  bool significant = false;  // p < alpha
  int n = 0;                 // pairs left after dropping zero differences
  double w_plus = 0.0;       // rank sum of positive differences
  bool exact = false;
};

/// Paired two-sided Wilcoxon signed-rank test on a - b. Zero differences are
/// dropped and tied |differences| share their average rank.
/// Throws Error(kLengthMismatch) for unequal lengths and Error(kDegenerateInput)
/// when fewer than 5 non-zero differences remain.
WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    double alpha = 0.01,
                                    WilcoxonMethod method = WilcoxonMethod::kAuto);

enum class EffectLabel { kNegligible, kSmall, kMedium, kLarge };

std::string_view to_string(EffectLabel label);

struct EffectSize {
  double d = 0.0;
  EffectLabel label = EffectLabel::kNegligible;
};

/// Negligible |d| < 0.2, Small < 0.5, Medium < 0.8, Large otherwise.
EffectLabel effect_label(double d);

/// (mean(a) - mean(b)) / pooled sample standard deviation.
/// Throws Error(kInvalidArgument) if either side has fewer than 2 values and
/// Error(kZeroVariance) if the pooled deviation is zero.
EffectSize cohens_d(std::span<const double> a, std::span<const double> b);

}  // namespace faultlens
