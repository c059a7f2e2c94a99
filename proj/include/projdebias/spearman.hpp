#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace projdebias {

enum class PValueMethod {
  Auto,          // exact permutation for n <= kExactPermutationMaxN, t-approximation above
  TDistribution, // t = rho * sqrt((n - 2) / (1 - rho^2)), two-sided Student t with n - 2 dof
  Permutation,   // exact enumeration of all n! orderings
};

inline constexpr std::size_t kExactPermutationMaxN = 9;

struct CorrelationResult {
  double rho = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
  PValueMethod method = PValueMethod::TDistribution;
};

/// Ranks with ties replaced by their average (1-based).
std::vector<double> average_ranks(std::span<const double> values);

/// Spearman rank correlation (Pearson correlation of average ranks) with a two-sided p-value.
/// Throws on length mismatch, n < 3, or a constant column ("zero rank variance").
CorrelationResult spearman(std::span<const double> x, std::span<const double> y,
                           PValueMethod method = PValueMethod::Auto);

/// Two-sided p-value of the t-approximation for a given rho and n.
double spearman_t_pvalue(double rho, std::size_t n);

}  // namespace projdebias
