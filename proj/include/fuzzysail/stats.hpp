#ifndef FUZZYSAIL_STATS_HPP_
#define FUZZYSAIL_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "fuzzysail/numeric.hpp"

namespace fuzzysail {

inline double mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of empty sample");
  return exact_sum(xs) / static_cast<double>(xs.size());
}

/// Sample standard deviation (n - 1 denominator); 0 for a single value.
inline double sample_stddev(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("stddev of empty sample");
  if (xs.size() == 1) return 0.0;
  const double m = mean(xs);
  std::vector<double> sq;
  sq.reserve(xs.size());
  for (double x : xs) sq.push_back((x - m) * (x - m));
  return std::sqrt(exact_sum(sq) / static_cast<double>(xs.size() - 1));
}

/// Midranks (1-based) of the pooled sample, ties sharing their mean rank.
inline std::vector<double> midranks(std::span<const double> pooled) {
  std::vector<std::size_t> order(pooled.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pooled[a] < pooled[b]; });
  std::vector<double> ranks(pooled.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && pooled[order[j + 1]] == pooled[order[i]]) ++j;
    const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

struct MannWhitneyResult {
  double u = 0.0;  // U statistic of the first sample
  double p = 1.0;  // two-sided
  bool exact = false;
};

/// Combined sample size up to which the exact permutation distribution is used.
inline constexpr std::size_t kMannWhitneyExactLimit = 16;

namespace detail {

// Exact two-sided p: the fraction of all size-n_a subsets of the pooled
// ranks whose U is at least as far from its mean as the observed one.
// Ranks are doubled so midranks become integers.
inline double mann_whitney_exact_p(const std::vector<double>& ranks, std::size_t n_a,
                                   double u_obs) {
  const std::size_t n = ranks.size();
  const std::size_t n_b = n - n_a;
  std::vector<int> r2(n);
  int total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    r2[i] = static_cast<int>(std::lround(ranks[i] * 2.0));
    total += r2[i];
  }
  // count[k][s]: subsets of size k with doubled rank sum s.
  std::vector<std::vector<double>> count(n_a + 1, std::vector<double>(total + 1, 0.0));
  count[0][0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = std::min(i + 1, n_a); k >= 1; --k) {
      for (int s = total; s >= r2[i]; --s) count[k][s] += count[k - 1][s - r2[i]];
    }
  }
  // 2U = 2R - n_a (n_a + 1); centred: 2U - n_a n_b.
  const long long offset = static_cast<long long>(n_a * (n_a + 1));
  const long long centre = static_cast<long long>(n_a * n_b);
  const long long obs = std::llabs(std::llround(2.0 * u_obs) - centre);
  double hits = 0.0, all = 0.0;
  for (int s = 0; s <= total; ++s) {
    const double c = count[n_a][s];
    if (c == 0.0) continue;
    all += c;
    if (std::llabs(static_cast<long long>(s) - offset - centre) >= obs) hits += c;
  }
  return std::min(1.0, hits / all);
}

}  // namespace detail

/// Two-sided unpaired Mann-Whitney U test. Exact when the combined size is
/// at most 16; otherwise the normal approximation with tie and continuity
/// corrections.
inline MannWhitneyResult mann_whitney(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("mann_whitney needs non-empty samples");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const auto ranks = midranks(pooled);
  const double n_a = static_cast<double>(a.size());
  const double n_b = static_cast<double>(b.size());
  const double r_a = exact_sum(std::span<const double>(ranks.data(), a.size()));

  MannWhitneyResult res;
  res.u = r_a - n_a * (n_a + 1.0) / 2.0;
  if (pooled.size() <= kMannWhitneyExactLimit) {
    res.exact = true;
    res.p = detail::mann_whitney_exact_p(ranks, a.size(), res.u);
    return res;
  }

  const double n = n_a + n_b;
  double tie_term = 0.0;
  {
    std::vector<double> sorted = pooled;
    std::sort(sorted.begin(), sorted.end());
    std::size_t i = 0;
    while (i < sorted.size()) {
      std::size_t j = i;
      while (j + 1 < sorted.size() && sorted[j + 1] == sorted[i]) ++j;
      const double t = static_cast<double>(j - i + 1);
      tie_term += t * t * t - t;
      i = j + 1;
    }
  }
  const double mu = n_a * n_b / 2.0;
  const double var = n_a * n_b / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
  if (var <= 0.0) {
    res.p = 1.0;  // every value tied
    return res;
  }
  const double z = std::max(0.0, std::fabs(res.u - mu) - 0.5) / std::sqrt(var);
  res.p = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
  return res;
}

}  // namespace fuzzysail

#endif  // FUZZYSAIL_STATS_HPP_
