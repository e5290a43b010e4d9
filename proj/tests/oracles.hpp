#ifndef FUZZYSAIL_TESTS_ORACLES_HPP_
#define FUZZYSAIL_TESTS_ORACLES_HPP_

// Independent reference computations used to check the library. None of
// these call into the code paths they verify.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

/// Trapezoid membership written out case by case.
inline double trapezoid(double a, double b, double c, double d, double x) {
  if (x <= a && a < b) return 0.0;
  if (x >= d && c < d) return 0.0;
  if (x < a || x > d) return 0.0;
  if (x < b) return (x - a) / (b - a);
  if (x <= c) return 1.0;
  return (d - x) / (d - c);
}

/// Min and max of the interval weighted average by enumerating every
/// corner selection w_k in {lo_k, hi_k} over the rules with hi_k > 0.
inline std::pair<double, double> corner_minmax(const std::vector<double>& y,
                                               const std::vector<double>& lo,
                                               const std::vector<double>& hi) {
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (hi[k] > 0.0) active.push_back(k);
  }
  double best_lo = std::numeric_limits<double>::infinity();
  double best_hi = -std::numeric_limits<double>::infinity();
  const std::uint64_t n = active.size();
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    long double num = 0.0L, den = 0.0L;
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::size_t k = active[i];
      const double w = (mask >> i) & 1ULL ? hi[k] : lo[k];
      num += static_cast<long double>(w) * y[k];
      den += w;
    }
    if (den <= 0.0L) continue;
    const double v = static_cast<double>(num / den);
    best_lo = std::min(best_lo, v);
    best_hi = std::max(best_hi, v);
  }
  return {best_lo, best_hi};
}

/// Exact two-sided Mann-Whitney p by visiting every subset of the pooled
/// sample (feasible for small samples only). U counts pairs a > b plus half
/// the ties.
inline double mann_whitney_bruteforce_p(const std::vector<double>& a,
                                        const std::vector<double>& b) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  auto u_of = [&](const std::vector<bool>& in_a) {
    double u = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_a[i]) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (in_a[j]) continue;
        if (pooled[i] > pooled[j]) u += 1.0;
        else if (pooled[i] == pooled[j]) u += 0.5;
      }
    }
    return u;
  };
  std::vector<bool> obs(n, false);
  for (std::size_t i = 0; i < na; ++i) obs[i] = true;
  const double centre = static_cast<double>(na * (n - na)) / 2.0;
  const double d_obs = std::fabs(u_of(obs) - centre);
  double hits = 0.0, total = 0.0;
  for (std::uint64_t mask = 0; mask < (1ULL << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcountll(mask)) != na) continue;
    std::vector<bool> in_a(n);
    for (std::size_t i = 0; i < n; ++i) in_a[i] = (mask >> i) & 1ULL;
    total += 1.0;
    if (std::fabs(u_of(in_a) - centre) >= d_obs - 1e-9) hits += 1.0;
  }
  return hits / total;
}

/// Monte-Carlo permutation estimate of the two-sided Mann-Whitney p.
inline double mann_whitney_permutation_p(const std::vector<double>& a,
                                         const std::vector<double>& b, int resamples,
                                         std::uint64_t seed) {
  std::vector<double> pooled(a);
  pooled.insert(pooled.end(), b.begin(), b.end());
  const std::size_t n = pooled.size(), na = a.size();
  // Midranks, computed by counting.
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n; ++i) {
    double less = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (pooled[j] < pooled[i]) less += 1.0;
      else if (pooled[j] == pooled[i]) equal += 1.0;
    }
    ranks[i] = less + (equal + 1.0) / 2.0;
  }
  const double offset = static_cast<double>(na * (na + 1)) / 2.0;
  const double centre = static_cast<double>(na * (n - na)) / 2.0;
  double r_obs = 0.0;
  for (std::size_t i = 0; i < na; ++i) r_obs += ranks[i];
  const double d_obs = std::fabs(r_obs - offset - centre);

  std::mt19937_64 rng(seed);
  std::vector<double> work = ranks;
  long hits = 0;
  for (int r = 0; r < resamples; ++r) {
    double sum = 0.0;
    for (std::size_t i = 0; i < na; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(work[i], work[pick(rng)]);
      sum += work[i];
    }
    if (std::fabs(sum - offset - centre) >= d_obs - 1e-9) ++hits;
  }
  return static_cast<double>(hits) / resamples;
}

}  // namespace oracle

#endif  // FUZZYSAIL_TESTS_ORACLES_HPP_
