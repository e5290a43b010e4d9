#ifndef FUZZYSAIL_NUMERIC_HPP_
#define FUZZYSAIL_NUMERIC_HPP_

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace fuzzysail {

/// Correctly rounded sum of a set of doubles (Shewchuk's partials).
/// The result does not depend on summation order, and the sum of a negated
/// set is the exact negation of the sum.
inline double exact_sum(std::span<const double> values) {
  // Partials are non-overlapping, so finite doubles never need more than
  // about 40 of them.
  std::array<double, 64> partials;
  std::size_t count = 0;
  for (double x : values) {
    if (x == 0.0) continue;
    if (!std::isfinite(x)) throw std::invalid_argument("exact_sum of a non-finite value");
    std::size_t used = 0;
    for (std::size_t k = 0; k < count; ++k) {
      double y = partials[k];
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[used++] = lo;
      x = hi;
    }
    partials[used++] = x;
    count = used;
  }
  if (count == 0) return 0.0;
  if (partials.empty()) return 0.0;

  // Round the partials back down to a single double, handling the
  // half-way case the same way Python's math.fsum does.
  std::size_t n = count;
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) ||
                (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

inline double exact_sum(std::initializer_list<double> values) {
  return exact_sum(std::span<const double>(values.begin(), values.size()));
}

/// Wraps an angle into [0, 360).
inline double normalize_heading(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r -= 360.0;
  return r;
}

/// Wraps an angle into (-180, 180].
inline double wrap_180(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r > 180.0) r -= 360.0;
  if (r <= -180.0) r += 360.0;
  return r;
}

/// Shortest signed turn from `current` to `desired`, in (-180, 180].
/// Positive means a clockwise (starboard) turn.
inline double wrap_error(double desired, double current) {
  return wrap_180(desired - current);
}

inline double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// SplitMix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Seeded random stream. The engine is std::mt19937_64 (fully specified by
/// the standard); the variate transforms are written out here so that draws
/// are bit-identical across standard library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : engine_(seed) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via the Box-Muller transform (cosine branch only).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double stddev) {
    return mean + stddev * normal();
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace fuzzysail

#endif  // FUZZYSAIL_NUMERIC_HPP_
