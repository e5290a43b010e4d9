#ifndef FUZZYSAIL_FUZZY_HPP_
#define FUZZYSAIL_FUZZY_HPP_

// Two-input, singleton-output fuzzy inference: type-1, interval type-2
// (Karnik-Mendel type reduction) and non-stationary ensembles.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "fuzzysail/numeric.hpp"

namespace fuzzysail {

inline constexpr std::size_t kTermCount = 5;
inline constexpr std::size_t kRuleCount = kTermCount * kTermCount;

using Memberships = std::array<double, kTermCount>;

class OutOfUniverse : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Trapezoid (a, b, c, d): 0 outside [a, d], 1 on [b, c], linear between.
/// Triangles have b == c; shoulders have a == b or c == d.
class PiecewiseLinearMF {
 public:
  PiecewiseLinearMF() = default;
  PiecewiseLinearMF(double a, double b, double c, double d)
      : a_(a), b_(b), c_(c), d_(d) {
    if (!(std::isfinite(a) && std::isfinite(b) && std::isfinite(c) &&
          std::isfinite(d))) {
      throw std::invalid_argument("membership function points must be finite");
    }
    if (!(a <= b && b <= c && c <= d)) {
      throw std::invalid_argument(
          "membership function requires a <= b <= c <= d");
    }
  }

  static PiecewiseLinearMF triangle(double left, double peak, double right) {
    return {left, peak, peak, right};
  }

  double a() const { return a_; }
  double b() const { return b_; }
  double c() const { return c_; }
  double d() const { return d_; }

  double operator()(double x) const {
    if (x < a_ || x > d_) return 0.0;
    if (x >= b_ && x <= c_) return 1.0;
    if (x < b_) return (x - a_) / (b_ - a_);
    return (d_ - x) / (d_ - c_);
  }

  PiecewiseLinearMF shifted(double dx) const {
    return {a_ + dx, b_ + dx, c_ + dx, d_ + dx};
  }

  friend bool operator==(const PiecewiseLinearMF&,
                         const PiecewiseLinearMF&) = default;

 private:
  double a_ = 0.0, b_ = 0.0, c_ = 0.0, d_ = 0.0;
};

inline double membership(const PiecewiseLinearMF& mf, double x) { return mf(x); }

struct Term {
  std::string label;
  PiecewiseLinearMF mf;

  friend bool operator==(const Term&, const Term&) = default;
};

/// An input variable with five ordered terms over a closed universe.
class LinguisticVariable {
 public:
  LinguisticVariable() = default;
  LinguisticVariable(std::string name, double lo, double hi,
                     std::array<Term, kTermCount> terms)
      : name_(std::move(name)), lo_(lo), hi_(hi), terms_(std::move(terms)) {
    if (!(lo < hi)) throw std::invalid_argument("universe must have lo < hi");
    for (std::size_t i = 1; i < kTermCount; ++i) {
      const auto& prev = terms_[i - 1].mf;
      const auto& cur = terms_[i].mf;
      if (cur.a() < prev.a() || cur.b() < prev.b() || cur.c() < prev.c() ||
          cur.d() < prev.d()) {
        throw std::invalid_argument("terms of '" + name_ +
                                    "' are not ordered left to right");
      }
    }
    check_coverage();
  }

  const std::string& name() const { return name_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  const std::array<Term, kTermCount>& terms() const { return terms_; }
  const Term& term(std::size_t i) const { return terms_.at(i); }

  bool contains(double x) const { return x >= lo_ && x <= hi_; }

  /// The first term is a left shoulder when its plateau reaches the left
  /// edge of the universe; likewise for the last term on the right.
  bool left_shoulder() const {
    const auto& mf = terms_.front().mf;
    return mf.a() == mf.b() && mf.b() <= lo_;
  }
  bool right_shoulder() const {
    const auto& mf = terms_.back().mf;
    return mf.c() == mf.d() && mf.c() >= hi_;
  }

  Memberships fuzzify(double x) const {
    if (!contains(x)) {
      throw OutOfUniverse("value " + std::to_string(x) + " outside universe of '" +
                          name_ + "'");
    }
    Memberships out{};
    for (std::size_t i = 0; i < kTermCount; ++i) out[i] = terms_[i].mf(x);
    return out;
  }

  /// Replaces the term shapes, keeping the name and universe.
  LinguisticVariable with_shapes(
      const std::array<PiecewiseLinearMF, kTermCount>& shapes) const {
    LinguisticVariable v = *this;
    for (std::size_t i = 0; i < kTermCount; ++i) v.terms_[i].mf = shapes[i];
    return v;
  }

  friend bool operator==(const LinguisticVariable&,
                         const LinguisticVariable&) = default;

 private:
  // Every point of the universe must be covered by some term. Memberships
  // are linear between consecutive breakpoints, so checking the breakpoints
  // inside the universe (and its edges) is enough.
  void check_coverage() const {
    std::vector<double> xs{lo_, hi_};
    for (const auto& t : terms_) {
      for (double p : {t.mf.a(), t.mf.b(), t.mf.c(), t.mf.d()}) {
        if (p > lo_ && p < hi_) xs.push_back(p);
      }
    }
    for (double x : xs) {
      bool covered = false;
      for (const auto& t : terms_) covered = covered || t.mf(x) > 0.0;
      if (!covered) {
        throw std::invalid_argument("terms of '" + name_ +
                                    "' leave a gap in the universe at " +
                                    std::to_string(x));
      }
    }
  }

  std::string name_;
  double lo_ = -180.0, hi_ = 180.0;
  std::array<Term, kTermCount> terms_{};
};

inline Memberships fuzzify(const LinguisticVariable& var, double x) {
  return var.fuzzify(x);
}

/// 5x5 consequent table plus the five output singletons (percent rudder
/// change). Entry (i, j) is the singleton index for error term i and
/// delta-error term j.
class RuleBase {
 public:
  using Table = std::array<std::array<int, kTermCount>, kTermCount>;

  RuleBase() = default;
  RuleBase(Table table, std::array<double, kTermCount> singletons)
      : table_(table), singletons_(singletons) {
    for (const auto& row : table_) {
      for (int idx : row) {
        if (idx < 0 || idx >= static_cast<int>(kTermCount)) {
          throw std::invalid_argument("rule consequent index out of range");
        }
      }
    }
    for (std::size_t i = 0; i < kTermCount; ++i) {
      if (!std::isfinite(singletons_[i])) {
        throw std::invalid_argument("singletons must be finite");
      }
      if (i > 0 && !(singletons_[i] > singletons_[i - 1])) {
        throw std::invalid_argument("singletons must be strictly increasing");
      }
    }
  }

  const Table& table() const { return table_; }
  const std::array<double, kTermCount>& singletons() const { return singletons_; }

  int consequent_index(std::size_t e_term, std::size_t de_term) const {
    return table_.at(e_term).at(de_term);
  }
  double consequent(std::size_t e_term, std::size_t de_term) const {
    return singletons_[static_cast<std::size_t>(consequent_index(e_term, de_term))];
  }
  /// Consequent of rule k, rules numbered row-major (k = 5 * e_term + de_term).
  double rule_consequent(std::size_t k) const {
    return consequent(k / kTermCount, k % kTermCount);
  }

  double min_output() const { return singletons_.front(); }
  double max_output() const { return singletons_.back(); }

  friend bool operator==(const RuleBase&, const RuleBase&) = default;

 private:
  Table table_{};
  std::array<double, kTermCount> singletons_{-60.0, -30.0, 0.0, 30.0, 60.0};
};

/// Default input partition on [-180, 180] degrees.
inline LinguisticVariable default_partition(std::string name) {
  return LinguisticVariable(
      std::move(name), -180.0, 180.0,
      {Term{"LN", {-180.0, -180.0, -90.0, -30.0}},
       Term{"N", PiecewiseLinearMF::triangle(-90.0, -30.0, 0.0)},
       Term{"Z", PiecewiseLinearMF::triangle(-30.0, 0.0, 30.0)},
       Term{"P", PiecewiseLinearMF::triangle(0.0, 30.0, 90.0)},
       Term{"LP", {30.0, 90.0, 180.0, 180.0}}});
}

/// Antisymmetric PD table: out = clamp(e + de - 2, 0, 4) over labels
/// SL, L, K, R, SR mapped to -60, -30, 0, +30, +60 percent.
inline RuleBase default_rule_base() {
  RuleBase::Table t{};
  for (int i = 0; i < static_cast<int>(kTermCount); ++i) {
    for (int j = 0; j < static_cast<int>(kTermCount); ++j) {
      t[i][j] = std::clamp(i + j - 2, 0, 4);
    }
  }
  return RuleBase(t, {-60.0, -30.0, 0.0, 30.0, 60.0});
}

/// Everything a two-input controller needs: both input partitions and the
/// rule base.
struct FuzzySystem {
  LinguisticVariable error = default_partition("error");
  LinguisticVariable derror = default_partition("derror");
  RuleBase rules = default_rule_base();

  friend bool operator==(const FuzzySystem&, const FuzzySystem&) = default;
};

// ---------------------------------------------------------------------------
// Type-1

/// Rule firing strengths (min t-norm), row-major.
inline std::array<double, kRuleCount> rule_strengths(const Memberships& mu_e,
                                                     const Memberships& mu_de) {
  std::array<double, kRuleCount> w{};
  for (std::size_t i = 0; i < kTermCount; ++i) {
    for (std::size_t j = 0; j < kTermCount; ++j) {
      w[i * kTermCount + j] = std::min(mu_e[i], mu_de[j]);
    }
  }
  return w;
}

/// Height defuzzification; 0 when nothing fires.
inline double weighted_average(const RuleBase& rules,
                               const std::array<double, kRuleCount>& w) {
  std::array<double, kRuleCount> num{};
  for (std::size_t k = 0; k < kRuleCount; ++k) num[k] = w[k] * rules.rule_consequent(k);
  const double den = exact_sum(w);
  if (den <= 0.0) return 0.0;
  // Rounding in w * y can push the quotient an ulp past the outer singletons.
  return std::clamp(exact_sum(num) / den, rules.min_output(), rules.max_output());
}

inline double evaluate_t1(const RuleBase& rules, const LinguisticVariable& error_var,
                          const LinguisticVariable& derror_var, double e, double de) {
  return weighted_average(
      rules, rule_strengths(error_var.fuzzify(e), derror_var.fuzzify(de)));
}

inline double evaluate_t1(const FuzzySystem& sys, double e, double de) {
  return evaluate_t1(sys.rules, sys.error, sys.derror, e, de);
}

// ---------------------------------------------------------------------------
// Interval type-2

struct FiringInterval {
  double lo = 0.0;
  double hi = 0.0;
};

/// Lower and upper membership functions around a base type-1 term. The upper
/// function is the base dilated by movement/2 on each side; the lower one is
/// contracted by the same amount, with its core collapsing to a point when
/// the contraction would invert it.
class IT2SetPair {
 public:
  IT2SetPair() = default;
  IT2SetPair(const PiecewiseLinearMF& base, double movement,
             bool open_left = false, bool open_right = false)
      : base_(base), movement_(movement) {
    if (!(movement >= 0.0) || !std::isfinite(movement)) {
      throw std::invalid_argument("movement must be finite and >= 0");
    }
    const double h = movement / 2.0;
    upper_ = {base.a() - h, base.b() - h, base.c() + h, base.d() + h};

    double lb = base.b() + h;
    double lc = base.c() - h;
    if (lb > lc) lb = lc = (base.b() + base.c()) / 2.0;
    double la = std::min(base.a() + h, lb);
    double ld = std::max(base.d() - h, lc);
    // Shoulders sitting on a universe edge keep their open plateau.
    if (open_left) { la = std::min(la, base.a()); lb = std::min(lb, base.b()); }
    if (open_right) { lc = std::max(lc, base.c()); ld = std::max(ld, base.d()); }
    lower_ = {la, lb, lc, ld};
  }

  const PiecewiseLinearMF& base() const { return base_; }
  const PiecewiseLinearMF& lower() const { return lower_; }
  const PiecewiseLinearMF& upper() const { return upper_; }
  double movement() const { return movement_; }

  FiringInterval operator()(double x) const { return {lower_(x), upper_(x)}; }

 private:
  PiecewiseLinearMF base_, lower_, upper_;
  double movement_ = 0.0;
};

using IT2Terms = std::array<IT2SetPair, kTermCount>;

inline IT2Terms make_it2_terms(const LinguisticVariable& var, double movement) {
  IT2Terms out;
  for (std::size_t i = 0; i < kTermCount; ++i) {
    out[i] = IT2SetPair(var.term(i).mf, movement,
                        i == 0 && var.left_shoulder(),
                        i == kTermCount - 1 && var.right_shoulder());
  }
  return out;
}

using FiringIntervals = std::array<FiringInterval, kRuleCount>;

inline FiringIntervals firing_interval(const IT2Terms& it2_error,
                                       const IT2Terms& it2_derror, double e,
                                       double de) {
  std::array<FiringInterval, kTermCount> me{}, mde{};
  for (std::size_t i = 0; i < kTermCount; ++i) {
    me[i] = it2_error[i](e);
    mde[i] = it2_derror[i](de);
  }
  FiringIntervals out{};
  for (std::size_t i = 0; i < kTermCount; ++i) {
    for (std::size_t j = 0; j < kTermCount; ++j) {
      out[i * kTermCount + j] = {std::min(me[i].lo, mde[j].lo),
                                 std::min(me[i].hi, mde[j].hi)};
    }
  }
  return out;
}

struct TypeReduced {
  double y_l = 0.0;
  double y_r = 0.0;
  bool fired = false;
  int iterations_l = 0;
  int iterations_r = 0;

  double midpoint() const { return (y_l + y_r) / 2.0; }
};

namespace detail {

struct WeightedPoint {
  double y;
  FiringInterval w;
};

// Weighted average with weight `hi` below the switch point and `lo` from it
// onwards (left endpoint), or the reverse (right endpoint).
inline double switched_average(std::span<const WeightedPoint> pts,
                               std::size_t switch_at, bool left) {
  std::vector<double> num, den;
  num.reserve(pts.size());
  den.reserve(pts.size());
  for (std::size_t k = 0; k < pts.size(); ++k) {
    const bool below = k < switch_at;
    const double w = (below == left) ? pts[k].w.hi : pts[k].w.lo;
    num.push_back(w * pts[k].y);
    den.push_back(w);
  }
  return std::clamp(exact_sum(num) / exact_sum(den), pts.front().y, pts.back().y);
}

// Karnik-Mendel iteration for one endpoint. `pts` sorted by y ascending and
// containing only points with hi > 0.
inline std::pair<double, int> km_endpoint(std::span<const WeightedPoint> pts,
                                          bool left) {
  std::vector<double> num, den;
  for (const auto& p : pts) {
    const double w = (p.w.lo + p.w.hi) / 2.0;
    num.push_back(w * p.y);
    den.push_back(w);
  }
  double y = std::clamp(exact_sum(num) / exact_sum(den), pts.front().y, pts.back().y);
  std::size_t prev_switch = pts.size() + 1;
  const int max_iter = static_cast<int>(std::max<std::size_t>(pts.size(), 1));
  int iter = 0;
  while (iter < max_iter) {
    ++iter;
    // Left: every point with y_k <= y takes its upper weight.
    // Right: every point with y_k < y takes its lower weight.
    std::size_t sw = 0;
    while (sw < pts.size() && (left ? pts[sw].y <= y : pts[sw].y < y)) ++sw;
    // The lowest point always takes its upper weight on the left, the highest
    // on the right, so the denominator stays positive.
    sw = left ? std::max<std::size_t>(sw, 1) : std::min(sw, pts.size() - 1);
    if (sw == prev_switch) break;
    prev_switch = sw;
    y = switched_average(pts, sw, left);
  }
  return {y, iter};
}

}  // namespace detail

/// Karnik-Mendel type reduction of an interval weighted average with
/// singleton consequents `y`. Returns (0, 0) with fired = false when no
/// interval has a positive upper bound.
inline TypeReduced reduce_km(std::span<const double> y,
                             std::span<const FiringInterval> intervals) {
  if (y.size() != intervals.size()) {
    throw std::invalid_argument("consequent and interval counts differ");
  }
  std::vector<detail::WeightedPoint> pts;
  for (std::size_t k = 0; k < y.size(); ++k) {
    if (intervals[k].hi > 0.0) pts.push_back({y[k], intervals[k]});
  }
  if (pts.empty()) return {};
  std::stable_sort(pts.begin(), pts.end(),
                   [](const auto& a, const auto& b) { return a.y < b.y; });
  TypeReduced out;
  out.fired = true;
  std::tie(out.y_l, out.iterations_l) = detail::km_endpoint(pts, true);
  std::tie(out.y_r, out.iterations_r) = detail::km_endpoint(pts, false);
  return out;
}

inline TypeReduced reduce_km(const FiringIntervals& intervals, const RuleBase& rules) {
  std::array<double, kRuleCount> y{};
  for (std::size_t k = 0; k < kRuleCount; ++k) y[k] = rules.rule_consequent(k);
  return reduce_km(std::span<const double>(y), std::span<const FiringInterval>(intervals));
}

/// Interval type-2 system derived from a type-1 system by a uniform FOU.
class IT2System {
 public:
  IT2System(const FuzzySystem& base, double movement)
      : rules_(base.rules),
        error_(make_it2_terms(base.error, movement)),
        derror_(make_it2_terms(base.derror, movement)),
        error_var_(base.error),
        derror_var_(base.derror),
        movement_(movement) {}

  TypeReduced evaluate(double e, double de) const {
    if (!error_var_.contains(e)) {
      throw OutOfUniverse("error outside universe: " + std::to_string(e));
    }
    if (!derror_var_.contains(de)) {
      throw OutOfUniverse("derror outside universe: " + std::to_string(de));
    }
    return reduce_km(firing_interval(error_, derror_, e, de), rules_);
  }

  const IT2Terms& error_terms() const { return error_; }
  const IT2Terms& derror_terms() const { return derror_; }
  const RuleBase& rules() const { return rules_; }
  double movement() const { return movement_; }

 private:
  RuleBase rules_;
  IT2Terms error_, derror_;
  LinguisticVariable error_var_, derror_var_;
  double movement_;
};

// ---------------------------------------------------------------------------
// Non-stationary

enum class PerturbMode {
  kPerTerm,  // independent horizontal shift for every term
  kShared,   // one shift per variable, applied to all of its terms
};

struct NSConfig {
  double sigma = 0.0;
  int ensemble_size = 30;
  std::uint64_t rng_seed = 0;
  PerturbMode mode = PerturbMode::kPerTerm;
};

/// Shifts a term by dx; edge shoulders keep their plateau reaching the
/// universe edge so the partition stays complete.
inline PiecewiseLinearMF shift_term(const LinguisticVariable& var, std::size_t i,
                                    double dx) {
  const auto& mf = var.term(i).mf;
  double a = mf.a() + dx, b = mf.b() + dx, c = mf.c() + dx, d = mf.d() + dx;
  if (i == 0 && var.left_shoulder()) {
    a = b = std::min(a, var.lo());
    c = std::max(c, b);
    d = std::max(d, c);
  }
  if (i == kTermCount - 1 && var.right_shoulder()) {
    c = d = std::max(d, var.hi());
    b = std::min(b, c);
    a = std::min(a, b);
  }
  return {a, b, c, d};
}

/// One random instantiation of `base`: every term shifted horizontally by a
/// Normal(0, sigma) draw (one draw per term, or one shared draw).
inline LinguisticVariable perturb(const LinguisticVariable& base, double sigma,
                                  Rng& rng, PerturbMode mode = PerturbMode::kPerTerm) {
  if (!(sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (sigma == 0.0) return base;
  std::array<PiecewiseLinearMF, kTermCount> shapes;
  const double shared = mode == PerturbMode::kShared ? rng.normal(0.0, sigma) : 0.0;
  for (std::size_t i = 0; i < kTermCount; ++i) {
    const double dx = mode == PerturbMode::kShared ? shared : rng.normal(0.0, sigma);
    shapes[i] = shift_term(base, i, dx);
  }
  return base.with_shapes(shapes);
}

/// Mean type-1 output over `cfg.ensemble_size` fresh instantiations drawn
/// from `rng`. Error terms are drawn before delta-error terms.
inline double evaluate_ns(const NSConfig& cfg, const FuzzySystem& sys, Rng& rng,
                          double e, double de) {
  if (cfg.ensemble_size < 1) throw std::invalid_argument("ensemble_size must be >= 1");
  if (!(cfg.sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
  if (cfg.sigma == 0.0) return evaluate_t1(sys, e, de);
  if (!sys.error.contains(e)) throw OutOfUniverse("error outside universe");
  if (!sys.derror.contains(de)) throw OutOfUniverse("derror outside universe");
  std::vector<double> outputs;
  outputs.reserve(static_cast<std::size_t>(cfg.ensemble_size));
  for (int n = 0; n < cfg.ensemble_size; ++n) {
    const auto ev = perturb(sys.error, cfg.sigma, rng, cfg.mode);
    const auto dv = perturb(sys.derror, cfg.sigma, rng, cfg.mode);
    outputs.push_back(evaluate_t1(sys.rules, ev, dv, e, de));
  }
  return exact_sum(outputs) / static_cast<double>(cfg.ensemble_size);
}

}  // namespace fuzzysail

#endif  // FUZZYSAIL_FUZZY_HPP_
