#include "projdebias/spearman.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "projdebias/error.hpp"

namespace projdebias {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

double spearman_t_pvalue(double rho, std::size_t n) {
  if (n < 3) throw Error("spearman: need at least 3 samples");
  if (std::abs(rho) >= 1.0) return 0.0;
  const double dof = static_cast<double>(n - 2);
  const double t = rho * std::sqrt(dof / ((1.0 - rho) * (1.0 + rho)));
  const boost::math::students_t_distribution<double> dist(dof);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

namespace {

double centered_cross(const std::vector<double>& a, const std::vector<double>& b, double mean) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - mean) * (b[i] - mean);
  return s;
}

double permutation_pvalue(const std::vector<double>& rx, const std::vector<double>& ry, double mean) {
  const double observed = std::abs(centered_cross(rx, ry, mean));
  double scale = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) scale += std::abs((rx[i] - mean) * (ry[i] - mean));
  const double slack = 1e-12 * std::max(scale, 1.0);

  std::vector<std::size_t> idx(ry.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::vector<double> permuted(ry.size());
  std::size_t hits = 0;
  std::size_t total = 0;
  do {
    for (std::size_t i = 0; i < idx.size(); ++i) permuted[i] = ry[idx[i]];
    if (std::abs(centered_cross(rx, permuted, mean)) >= observed - slack) ++hits;
    ++total;
  } while (std::next_permutation(idx.begin(), idx.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace

CorrelationResult spearman(std::span<const double> x, std::span<const double> y, PValueMethod method) {
  if (x.size() != y.size()) throw Error("spearman: length mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw Error("spearman: need at least 3 samples");
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error("spearman: non-finite value");
  }

  const std::vector<double> rx = average_ranks(x);
  const std::vector<double> ry = average_ranks(y);
  const double mean = (static_cast<double>(n) + 1.0) / 2.0;
  double sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) throw Error("spearman: zero rank variance");

  CorrelationResult r;
  r.n = n;
  r.rho = std::clamp(centered_cross(rx, ry, mean) / std::sqrt(sxx * syy), -1.0, 1.0);

  if (method == PValueMethod::Auto) {
    method = n <= kExactPermutationMaxN ? PValueMethod::Permutation : PValueMethod::TDistribution;
  }
  if (method == PValueMethod::Permutation && n > 12) {
    throw Error("spearman: exact permutation p-value limited to n <= 12");
  }
  r.method = method;
  r.p_value = method == PValueMethod::Permutation ? permutation_pvalue(rx, ry, mean) : spearman_t_pvalue(r.rho, n);
  return r;
}

}  // namespace projdebias
