#ifndef FUZZYSAIL_CONTROLLERS_HPP_
#define FUZZYSAIL_CONTROLLERS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "fuzzysail/csv.hpp"
#include "fuzzysail/fuzzy.hpp"
#include "fuzzysail/numeric.hpp"

namespace fuzzysail {

enum class ControllerKind { kPI, kType1, kNonStationary, kIntervalType2, kDualSurface };

inline std::string_view to_string(ControllerKind k) {
  switch (k) {
    case ControllerKind::kPI: return "pi";
    case ControllerKind::kType1: return "t1";
    case ControllerKind::kNonStationary: return "ns";
    case ControllerKind::kIntervalType2: return "it2";
    case ControllerKind::kDualSurface: return "ds";
  }
  return "?";
}

inline std::string_view display_name(ControllerKind k) {
  switch (k) {
    case ControllerKind::kPI: return "PI";
    case ControllerKind::kType1: return "Type 1";
    case ControllerKind::kNonStationary: return "Non Stationary";
    case ControllerKind::kIntervalType2: return "Type 2";
    case ControllerKind::kDualSurface: return "Dual Surface";
  }
  return "?";
}

inline std::optional<ControllerKind> parse_controller_kind(std::string_view s) {
  for (auto k : {ControllerKind::kPI, ControllerKind::kType1,
                 ControllerKind::kNonStationary, ControllerKind::kIntervalType2,
                 ControllerKind::kDualSurface}) {
    if (s == to_string(k)) return k;
  }
  return std::nullopt;
}

/// Fixed FOU width used by the dual-surface controller while its threshold
/// is varied.
inline constexpr double kDualSurfaceMovement = 5.0;

/// Controller variety plus its single tuning parameter: sigma (ns),
/// movement (it2) or threshold (ds). PI and type-1 take no parameter.
struct ControllerSpec {
  ControllerKind kind = ControllerKind::kType1;
  std::optional<double> param;

  bool takes_param() const {
    return kind == ControllerKind::kNonStationary ||
           kind == ControllerKind::kIntervalType2 ||
           kind == ControllerKind::kDualSurface;
  }

  /// Throws std::invalid_argument when the parameter does not suit the kind.
  void validate() const {
    if (!takes_param()) {
      if (param) {
        throw std::invalid_argument(std::string(to_string(kind)) +
                                    " does not take a parameter");
      }
      return;
    }
    if (!param) {
      throw std::invalid_argument(std::string(to_string(kind)) +
                                  " requires a parameter");
    }
    const double p = *param;
    if (std::isnan(p) || p < 0.0) {
      throw std::invalid_argument("parameter must be >= 0");
    }
    if (std::isinf(p) && kind != ControllerKind::kDualSurface) {
      throw std::invalid_argument("parameter must be finite");
    }
  }

  std::string param_label() const {
    if (!param) return "NA";
    return csv::format_double(*param);
  }

  std::string label() const {
    return std::string(to_string(kind)) + (param ? "(" + param_label() + ")" : "");
  }

  friend bool operator==(const ControllerSpec&, const ControllerSpec&) = default;
};

enum class RudderMode { kDelta, kAbsolute };

inline std::string_view to_string(RudderMode m) {
  return m == RudderMode::kDelta ? "delta" : "absolute";
}

struct ControllerInput {
  double current_heading = 0.0;  // degrees [0, 360)
  double desired_bearing = 0.0;  // degrees [0, 360)
  double dt = 1.0;               // seconds
};

/// Uniform step contract shared by all heading controllers. Fuzzy
/// controllers emit rudder deltas (percent per step); PI emits an absolute
/// rudder position.
class Controller {
 public:
  virtual ~Controller() = default;
  virtual double step(const ControllerInput& in) = 0;
  virtual RudderMode mode() const = 0;
  virtual void reset() = 0;
};

struct PIGains {
  double kp = 1.7;
  double ki = 0.01;
  double limit = 100.0;
};

/// Positional PI on the wrapped heading error. The output uses the integral
/// accumulated over previous steps; the integral is clamped so that
/// |ki * integral| <= limit.
class PIController final : public Controller {
 public:
  explicit PIController(PIGains gains = {}) : gains_(gains) {}

  double step(const ControllerInput& in) override {
    if (!(in.dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    const double e = wrap_error(in.desired_bearing, in.current_heading);
    const double u = std::clamp(gains_.kp * e + gains_.ki * integral_,
                                -gains_.limit, gains_.limit);
    integral_ += e * in.dt;
    if (gains_.ki > 0.0) {
      const double bound = gains_.limit / gains_.ki;
      integral_ = std::clamp(integral_, -bound, bound);
    }
    return u;
  }

  RudderMode mode() const override { return RudderMode::kAbsolute; }
  void reset() override { integral_ = 0.0; }

  double integral() const { return integral_; }
  void set_integral(double i) { integral_ = i; }

 private:
  PIGains gains_;
  double integral_ = 0.0;
};

/// Common error / delta-error bookkeeping for the fuzzy family. The first
/// step sees a delta-error of 0; later delta-errors are wrapped to
/// (-180, 180] so they stay inside the input universe.
class FuzzyController : public Controller {
 public:
  double step(const ControllerInput& in) override {
    if (!(in.dt > 0.0)) throw std::invalid_argument("dt must be > 0");
    const double e = wrap_error(in.desired_bearing, in.current_heading);
    if (!previous_error_) previous_error_ = e;
    const double de = wrap_180(e - *previous_error_);
    previous_error_ = e;
    return evaluate(e, de);
  }

  RudderMode mode() const override { return RudderMode::kDelta; }
  void reset() override { previous_error_.reset(); }

  /// Raw engine output at (e, de), bypassing the error memory.
  virtual double evaluate(double e, double de) = 0;

  std::optional<double> previous_error() const { return previous_error_; }
  void set_previous_error(double e) { previous_error_ = e; }

 private:
  std::optional<double> previous_error_;
};

class Type1Controller final : public FuzzyController {
 public:
  explicit Type1Controller(FuzzySystem sys = {}) : sys_(std::move(sys)) {}
  double evaluate(double e, double de) override { return evaluate_t1(sys_, e, de); }

 private:
  FuzzySystem sys_;
};

/// Non-stationary ensemble; each evaluation draws fresh instantiations from
/// the controller's own stream.
class NonStationaryController final : public FuzzyController {
 public:
  NonStationaryController(FuzzySystem sys, NSConfig cfg)
      : sys_(std::move(sys)), cfg_(cfg), rng_(cfg.rng_seed) {
    if (!(cfg.sigma >= 0.0)) throw std::invalid_argument("sigma must be >= 0");
    if (cfg.ensemble_size < 1) throw std::invalid_argument("ensemble_size must be >= 1");
  }

  double evaluate(double e, double de) override {
    return evaluate_ns(cfg_, sys_, rng_, e, de);
  }

  void reset() override {
    FuzzyController::reset();
    rng_ = Rng(cfg_.rng_seed);
  }

  const NSConfig& config() const { return cfg_; }

 private:
  FuzzySystem sys_;
  NSConfig cfg_;
  Rng rng_;
};

/// Interval type-2 controller acting on the midpoint of the type-reduced set.
class IntervalType2Controller final : public FuzzyController {
 public:
  IntervalType2Controller(const FuzzySystem& sys, double movement)
      : it2_(sys, movement) {}

  double evaluate(double e, double de) override {
    return it2_.evaluate(e, de).midpoint();
  }

  const IT2System& system() const { return it2_; }

 private:
  IT2System it2_;
};

struct DualSurfaceConfig {
  double threshold = 0.0;
  double movement = kDualSurfaceMovement;
};

/// Dual-surface selection: the mean of the lower (LS) and upper (US)
/// surfaces while |error| < threshold, LS for positive error beyond it and
/// US otherwise.
inline double dual_surface_select(double error, double threshold, double ls, double us) {
  const double diff = std::fabs(error);
  if (diff < threshold) return (ls + us) / 2.0;
  if (error > 0.0) return ls;
  return us;
}

class DualSurfaceController final : public FuzzyController {
 public:
  DualSurfaceController(const FuzzySystem& sys, DualSurfaceConfig cfg)
      : it2_(sys, cfg.movement), cfg_(cfg) {
    if (!(cfg.threshold >= 0.0)) throw std::invalid_argument("threshold must be >= 0");
  }

  double evaluate(double e, double de) override {
    const TypeReduced r = it2_.evaluate(e, de);
    return dual_surface_select(e, cfg_.threshold, r.y_l, r.y_r);
  }

  const DualSurfaceConfig& config() const { return cfg_; }

 private:
  IT2System it2_;
  DualSurfaceConfig cfg_;
};

/// Builds a controller from its spec. `seed` drives the non-stationary
/// ensemble stream and is ignored by the deterministic kinds.
inline std::unique_ptr<Controller> make_controller(const ControllerSpec& spec,
                                                   const FuzzySystem& sys,
                                                   std::uint64_t seed,
                                                   PIGains pi_gains = {},
                                                   PerturbMode ns_mode = PerturbMode::kPerTerm) {
  spec.validate();
  switch (spec.kind) {
    case ControllerKind::kPI:
      return std::make_unique<PIController>(pi_gains);
    case ControllerKind::kType1:
      return std::make_unique<Type1Controller>(sys);
    case ControllerKind::kNonStationary:
      return std::make_unique<NonStationaryController>(
          sys, NSConfig{*spec.param, 30, seed, ns_mode});
    case ControllerKind::kIntervalType2:
      return std::make_unique<IntervalType2Controller>(sys, *spec.param);
    case ControllerKind::kDualSurface:
      return std::make_unique<DualSurfaceController>(
          sys, DualSurfaceConfig{*spec.param, kDualSurfaceMovement});
  }
  throw std::invalid_argument("unknown controller kind");
}

}  // namespace fuzzysail

#endif  // FUZZYSAIL_CONTROLLERS_HPP_
