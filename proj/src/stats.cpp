#include "faultlens/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "faultlens/error.hpp"

namespace faultlens {

namespace {

struct SignedRanks {
  std::vector<double> ranks;  // average ranks of |d|
  std::vector<bool> positive;
  std::vector<int> tie_sizes;
};

SignedRanks rank_differences(const std::vector<double>& diffs) {
  const std::size_t n = diffs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t x, std::size_t y) { return std::abs(diffs[x]) < std::abs(diffs[y]); });

  SignedRanks out;
  out.ranks.assign(n, 0.0);
  out.positive.assign(n, false);
  std::size_t begin = 0;
  while (begin < n) {
    std::size_t end = begin + 1;
    while (end < n && std::abs(diffs[order[end]]) == std::abs(diffs[order[begin]])) ++end;
    const double avg = (static_cast<double>(begin + 1) + static_cast<double>(end)) / 2.0;
    for (std::size_t i = begin; i < end; ++i) out.ranks[order[i]] = avg;
    out.tie_sizes.push_back(static_cast<int>(end - begin));
    begin = end;
  }
  for (std::size_t i = 0; i < n; ++i) out.positive[i] = diffs[i] > 0.0;
  return out;
}

// Ranks are multiples of 0.5, so doubling them gives exact integer sums.
double exact_p(const SignedRanks& sr, double w_plus) {
  std::vector<int> doubled;
  int total = 0;
  for (double r : sr.ranks) {
    doubled.push_back(static_cast<int>(std::lround(2.0 * r)));
    total += doubled.back();
  }
  std::vector<std::uint64_t> ways(static_cast<std::size_t>(total) + 1, 0);
  ways[0] = 1;
  for (int r : doubled) {
    for (int s = total; s >= r; --s) ways[s] += ways[s - r];
  }
  const int observed = static_cast<int>(std::lround(2.0 * w_plus));
  std::uint64_t at_most = 0;
  std::uint64_t at_least = 0;
  for (int s = 0; s <= total; ++s) {
    if (s <= observed) at_most += ways[s];
    if (s >= observed) at_least += ways[s];
  }
  const double count = std::ldexp(1.0, static_cast<int>(sr.ranks.size()));
  const double one_sided = static_cast<double>(std::min(at_most, at_least)) / count;
  return std::min(1.0, 2.0 * one_sided);
}

double normal_p(const SignedRanks& sr, double w_plus) {
  const double n = static_cast<double>(sr.ranks.size());
  const double mean = n * (n + 1.0) / 4.0;
  double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
  for (int t : sr.tie_sizes) variance -= (static_cast<double>(t) * t * t - t) / 48.0;
  const double deviation = std::abs(w_plus - mean);
  const double z = deviation > 0.0 ? (deviation - 0.5) / std::sqrt(variance) : 0.0;
  return std::min(1.0, std::erfc(std::abs(z) / std::sqrt(2.0)));
}

double mean_of(std::span<const double> v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

WilcoxonResult wilcoxon_signed_rank(std::span<const double> a, std::span<const double> b,
                                    double alpha, WilcoxonMethod method) {
  if (a.size() != b.size()) {
    throw Error(ErrorKind::kLengthMismatch,
                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + " values");
  }
  std::vector<double> diffs;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    if (d != 0.0) diffs.push_back(d);
  }
  if (diffs.empty()) throw Error(ErrorKind::kDegenerateInput, "all paired differences are zero");
  if (diffs.size() < 5) {
    throw Error(ErrorKind::kDegenerateInput,
                "only " + std::to_string(diffs.size()) + " non-zero differences (need 5)");
  }

  const SignedRanks sr = rank_differences(diffs);
  WilcoxonResult result;
  result.n = static_cast<int>(diffs.size());
  for (std::size_t i = 0; i < diffs.size(); ++i) {
    if (sr.positive[i]) result.w_plus += sr.ranks[i];
  }

  result.exact = method == WilcoxonMethod::kExact ||
                 (method == WilcoxonMethod::kAuto && result.n <= kExactWilcoxonLimit);
  if (result.exact && result.n > 25) {
    throw Error(ErrorKind::kInvalidArgument, "exact enumeration limited to 25 differences");
  }
  result.p = result.exact ? exact_p(sr, result.w_plus) : normal_p(sr, result.w_plus);
  result.significant = result.p < alpha;
  return result;
}

std::string_view to_string(EffectLabel label) {
  switch (label) {
    case EffectLabel::kNegligible: return "Negligible";
    case EffectLabel::kSmall: return "Small";
    case EffectLabel::kMedium: return "Medium";
    case EffectLabel::kLarge: return "Large";
  }
  return "Unknown";
}

EffectLabel effect_label(double d) {
  const double magnitude = std::abs(d);
  if (magnitude < 0.2) return EffectLabel::kNegligible;
  if (magnitude < 0.5) return EffectLabel::kSmall;
  if (magnitude < 0.8) return EffectLabel::kMedium;
  return EffectLabel::kLarge;
}

EffectSize cohens_d(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "Cohen's d needs at least 2 values per side");
  }
  const double mean_a = mean_of(a);
  const double mean_b = mean_of(b);
  double ss_a = 0.0;
  double ss_b = 0.0;
  for (double x : a) ss_a += (x - mean_a) * (x - mean_a);
  for (double x : b) ss_b += (x - mean_b) * (x - mean_b);
  const double pooled =
      std::sqrt((ss_a + ss_b) / static_cast<double>(a.size() + b.size() - 2));
  if (pooled == 0.0) throw Error(ErrorKind::kZeroVariance, "pooled standard deviation is zero");
  const double d = (mean_a - mean_b) / pooled;
  return {d, effect_label(d)};
}

}  // namespace faultlens
