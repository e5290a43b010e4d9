#ifndef FUZZYSAIL_SIM_HPP_
#define FUZZYSAIL_SIM_HPP_

// Desk-scale sailing physics and episode execution against one waypoint.
//
// Conventions: compass degrees, clockwise positive, 0 = north (+y),
// 90 = east (+x). Wind directions give where the wind blows FROM.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "fuzzysail/controllers.hpp"
#include "fuzzysail/numeric.hpp"

namespace fuzzysail {

enum class NoiseLevel { kLow, kMedium, kHigh };

inline std::string_view to_string(NoiseLevel n) {
  switch (n) {
    case NoiseLevel::kLow: return "low";
    case NoiseLevel::kMedium: return "med";
    case NoiseLevel::kHigh: return "high";
  }
  return "?";
}

inline std::optional<NoiseLevel> parse_noise_level(std::string_view s) {
  if (s == "low") return NoiseLevel::kLow;
  if (s == "med" || s == "medium") return NoiseLevel::kMedium;
  if (s == "high") return NoiseLevel::kHigh;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Wind

struct WindModel {
  double base_direction = 120.0;  // degrees, blowing from
  double speed = 7.0;             // m/s
  double arc = 0.0;               // full width of the direction arc, degrees
  double change_period = 0.0;     // seconds between resamples; ignored when arc == 0
  std::uint64_t rng_seed = 0;
};

inline WindModel wind_preset(NoiseLevel level, double base_direction, double speed,
                             std::uint64_t seed) {
  WindModel m{base_direction, speed, 0.0, 0.0, seed};
  switch (level) {
    case NoiseLevel::kLow: break;
    case NoiseLevel::kMedium: m.arc = 20.0; m.change_period = 5.0; break;
    case NoiseLevel::kHigh: m.arc = 30.0; m.change_period = 3.0; break;
  }
  return m;
}

/// Piecewise-constant wind direction: resampled uniformly over
/// [base - arc/2, base + arc/2] at every multiple of the change period.
class WindProcess {
 public:
  explicit WindProcess(WindModel model)
      : model_(model), rng_(model.rng_seed), direction_(model.base_direction) {
    if (model_.arc < 0.0) throw std::invalid_argument("wind arc must be >= 0");
    if (model_.arc > 0.0 && !(model_.change_period > 0.0)) {
      throw std::invalid_argument("wind change period must be > 0");
    }
    next_change_ = model_.change_period;
  }

  /// Direction at time t; t must not decrease between calls.
  double direction_at(double t) {
    if (t < last_t_) throw std::invalid_argument("wind time went backwards");
    last_t_ = t;
    if (model_.arc == 0.0) return model_.base_direction;
    // Tolerance absorbs accumulated tick rounding (t = n * dt).
    while (t + 1e-9 >= next_change_) {
      direction_ = model_.base_direction +
                   rng_.uniform(-model_.arc / 2.0, model_.arc / 2.0);
      next_change_ += model_.change_period;
      ++changes_;
    }
    return direction_;
  }

  const WindModel& model() const { return model_; }
  double speed() const { return model_.speed; }
  std::size_t changes() const { return changes_; }

 private:
  WindModel model_;
  Rng rng_;
  double direction_;
  double next_change_ = 0.0;
  double last_t_ = 0.0;
  std::size_t changes_ = 0;
};

// ---------------------------------------------------------------------------
// Boat

struct PolarKnot {
  double twa;     // true wind angle, degrees
  double factor;  // boat speed / wind speed
};

struct PhysicsParams {
  double turn_gain = 10.0;   // deg/s per m/s of speed at full rudder
  double speed_tau = 3.0;    // s, first-order speed relaxation
  // Sideways drift as a fraction of wind speed, scaled by the sine of the
  // angle between heading and where the wind blows to.
  double leeway = 0.05;
  // Weather helm: yaw rate (deg/s per m/s of speed) turning the bow toward
  // the wind, scaled by the sine of the wind's bearing relative to the bow.
  double helm = 1.0;
  std::vector<PolarKnot> polar{{0.0, 0.0},   {45.0, 0.0},   {90.0, 0.5},
                               {110.0, 0.55}, {135.0, 0.45}, {180.0, 0.35}};
};

struct BoatState {
  double x = 0.0;            // m, east
  double y = 0.0;            // m, north
  double heading = 0.0;      // degrees [0, 360)
  double speed = 0.0;        // m/s
  double rudder = 0.0;       // percent [-100, 100]
  double sail_angle = 90.0;  // degrees [0, 90]
};

/// Angle between the heading and the direction the wind comes from, [0, 180].
inline double true_wind_angle(double heading, double wind_from) {
  return std::fabs(wrap_180(wind_from - heading));
}

inline double polar_factor(double twa, const std::vector<PolarKnot>& knots) {
  if (knots.empty()) return 0.0;
  if (twa <= knots.front().twa) return knots.front().factor;
  for (std::size_t i = 1; i < knots.size(); ++i) {
    if (twa <= knots[i].twa) {
      const auto& p = knots[i - 1];
      const auto& q = knots[i];
      return p.factor + (q.factor - p.factor) * (twa - p.twa) / (q.twa - p.twa);
    }
  }
  return knots.back().factor;
}

inline double polar_speed(double twa, double wind_speed,
                          const std::vector<PolarKnot>& knots = PhysicsParams{}.polar) {
  return wind_speed * polar_factor(twa, knots);
}

inline double sail_rule(double twa) { return std::clamp(twa / 2.0, 15.0, 90.0); }

inline double sail_efficiency(double sail_angle, double twa) {
  return std::max(0.0, std::cos(deg2rad(sail_angle - sail_rule(twa))));
}

/// Advances the boat by dt. Turn rate and position use the speed at the
/// start of the step; speed then relaxes exactly toward the polar target.
inline BoatState physics_step(const BoatState& s, double wind_from, double wind_speed,
                              double dt, const PhysicsParams& p = {}) {
  if (!(dt > 0.0)) throw std::invalid_argument("dt must be > 0");
  BoatState n = s;
  n.rudder = std::clamp(s.rudder, -100.0, 100.0);

  const double turn_rate =
      (p.turn_gain * (n.rudder / 100.0) +
       p.helm * std::sin(deg2rad(wind_from - s.heading))) * s.speed;
  const double h = deg2rad(s.heading);
  const double wind_to = wind_from + 180.0;
  const double drift = p.leeway * wind_speed * std::sin(deg2rad(wind_to - s.heading));
  n.x = s.x + (s.speed * std::sin(h) + drift * std::cos(h)) * dt;
  n.y = s.y + (s.speed * std::cos(h) - drift * std::sin(h)) * dt;
  n.heading = normalize_heading(s.heading + turn_rate * dt);

  const double twa = true_wind_angle(s.heading, wind_from);
  n.sail_angle = sail_rule(twa);
  const double target = polar_speed(twa, wind_speed, p.polar) *
                        sail_efficiency(n.sail_angle, twa);
  n.speed = std::max(0.0, target + (s.speed - target) * std::exp(-dt / p.speed_tau));
  return n;
}

// ---------------------------------------------------------------------------
// Tacking

struct TackParams {
  double no_go_half_angle = 45.0;
  double close_hauled_offset = 50.0;
  double cross_track_limit = 40.0;
};

/// kStarboard commands wind_from + offset, kPort wind_from - offset.
enum class TackSide { kStarboard, kPort };

struct TackMemory {
  TackSide side = TackSide::kStarboard;
  bool active = false;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

/// Compass bearing from `from` to `to`.
inline double bearing_to(Vec2 from, Vec2 to) {
  return normalize_heading(rad2deg(std::atan2(to.x - from.x, to.y - from.y)));
}

/// Signed distance of `p` from the line a->b, positive to the right of it.
inline double cross_track(Vec2 a, Vec2 b, Vec2 p) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len = std::hypot(dx, dy);
  if (len == 0.0) return 0.0;
  return ((p.x - a.x) * dy - (p.y - a.y) * dx) / len;
}

/// Rewrites the desired bearing when it falls inside the no-go cone:
/// sails close-hauled on the remembered tack and switches tack once the
/// boat is more than `cross_track_limit` metres off the line a->b and the
/// current tack takes it further away.
inline double tack_supervisor(double desired_bearing, double wind_from,
                              const BoatState& state, Vec2 line_start, Vec2 waypoint,
                              TackMemory& memory, const TackParams& params = {}) {
  if (true_wind_angle(desired_bearing, wind_from) > params.no_go_half_angle) {
    memory.active = false;
    return desired_bearing;
  }
  auto bearing_for = [&](TackSide side) {
    return normalize_heading(side == TackSide::kStarboard
                                 ? wind_from + params.close_hauled_offset
                                 : wind_from - params.close_hauled_offset);
  };
  if (!memory.active) {
    // Enter on whichever tack needs the smaller turn.
    const double ds = std::fabs(wrap_error(bearing_for(TackSide::kStarboard), state.heading));
    const double dp = std::fabs(wrap_error(bearing_for(TackSide::kPort), state.heading));
    memory.side = ds <= dp ? TackSide::kStarboard : TackSide::kPort;
    memory.active = true;
  }
  const double xt = cross_track(line_start, waypoint, {state.x, state.y});
  if (std::fabs(xt) > params.cross_track_limit) {
    // Rate of change of cross-track while sailing the current tack.
    const double b = deg2rad(bearing_for(memory.side));
    const double dx = waypoint.x - line_start.x, dy = waypoint.y - line_start.y;
    const double xt_rate = std::sin(b) * dy - std::cos(b) * dx;
    if ((xt > 0.0) == (xt_rate > 0.0)) {
      memory.side = memory.side == TackSide::kStarboard ? TackSide::kPort
                                                        : TackSide::kStarboard;
    }
  }
  return bearing_for(memory.side);
}

// ---------------------------------------------------------------------------
// Episodes

struct EpisodeConfig {
  Vec2 start{0.0, 0.0};
  Vec2 waypoint{-550.0, 0.0};
  double completion_radius = 10.0;  // m
  double timeout = 600.0;           // simulated s
  double physics_dt = 0.1;          // s
  double control_period = 1.0;      // s
  double start_heading = 270.0;
  double start_speed = 0.0;
  double wind_from = 120.0;
  double wind_speed = 7.0;
  PhysicsParams physics;
  TackParams tack;

  /// Physics sub-steps per control step; throws unless the control period is
  /// an integer multiple of physics_dt.
  int substeps() const {
    if (!(physics_dt > 0.0) || !(control_period > 0.0)) {
      throw std::invalid_argument("physics_dt and control_period must be > 0");
    }
    const double r = control_period / physics_dt;
    const double n = std::round(r);
    if (n < 1.0 || std::fabs(r - n) > 1e-9) {
      throw std::invalid_argument("control_period must be a multiple of physics_dt");
    }
    return static_cast<int>(n);
  }
};

struct TraceRow {
  double t = 0.0;
  double heading = 0.0;
  double desired = 0.0;
  double error = 0.0;
  double rudder = 0.0;
  double wind_dir = 0.0;
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const TraceRow&, const TraceRow&) = default;
};

using Trace = std::vector<TraceRow>;

/// Root mean square of the wrapped heading errors of a trace.
inline double rmse(std::span<const double> errors) {
  if (errors.empty()) throw std::invalid_argument("rmse of an empty trace");
  std::vector<double> sq;
  sq.reserve(errors.size());
  for (double e : errors) sq.push_back(e * e);
  return std::sqrt(exact_sum(sq) / static_cast<double>(errors.size()));
}

inline double rmse(const Trace& trace) {
  std::vector<double> errors;
  errors.reserve(trace.size());
  for (const auto& r : trace) errors.push_back(r.error);
  return rmse(errors);
}

struct RunRecord {
  std::string controller = "custom";  // controller label, e.g. "it2(5)"
  NoiseLevel noise = NoiseLevel::kLow;
  std::uint64_t seed = 0;
  bool completed = false;
  double time_taken = 0.0;  // s; the timeout when incomplete
  double rmse = 0.0;        // degrees
  Trace trace;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Stream ids used to derive per-episode seeds.
inline constexpr std::uint64_t kWindStream = 1;
inline constexpr std::uint64_t kControllerStream = 2;

inline std::uint64_t wind_seed(std::uint64_t episode_seed) {
  return mix_seed(episode_seed, kWindStream);
}
inline std::uint64_t controller_seed(std::uint64_t episode_seed) {
  return mix_seed(episode_seed, kControllerStream);
}

/// What the controller side sees at a control step.
struct Observation {
  double t = 0.0;
  double heading = 0.0;
  double desired = 0.0;
  double wind_dir = 0.0;
  double wind_speed = 0.0;
  double x = 0.0;
  double y = 0.0;
};

/// Episode as an explicit state machine: observe(), then apply() a rudder
/// command, until finished(). Used both in-process and by the TCP bridge.
class Episode {
 public:
  Episode(EpisodeConfig cfg, NoiseLevel noise, std::uint64_t seed)
      : cfg_(std::move(cfg)),
        noise_(noise),
        seed_(seed),
        substeps_(cfg_.substeps()),
        wind_(wind_preset(noise, cfg_.wind_from, cfg_.wind_speed, wind_seed(seed))) {
    if (!(cfg_.completion_radius >= 0.0)) {
      throw std::invalid_argument("completion_radius must be >= 0");
    }
    if (!(cfg_.timeout > 0.0)) throw std::invalid_argument("timeout must be > 0");
    boat_.x = cfg_.start.x;
    boat_.y = cfg_.start.y;
    boat_.heading = normalize_heading(cfg_.start_heading);
    boat_.speed = cfg_.start_speed;
    boat_.sail_angle = sail_rule(true_wind_angle(boat_.heading, cfg_.wind_from));
    if (distance_to_waypoint() <= cfg_.completion_radius) {
      completed_ = true;
      finished_ = true;
    }
  }

  bool finished() const { return finished_; }
  bool completed() const { return completed_; }
  const BoatState& boat() const { return boat_; }
  const Trace& trace() const { return trace_; }
  double time() const { return static_cast<double>(tick_) * cfg_.physics_dt; }
  const EpisodeConfig& config() const { return cfg_; }

  double distance_to_waypoint() const {
    return std::hypot(cfg_.waypoint.x - boat_.x, cfg_.waypoint.y - boat_.y);
  }

  Observation observe() {
    if (finished_) throw std::logic_error("episode already finished");
    const double t = time();
    wind_dir_ = wind_.direction_at(t);
    const double raw = bearing_to({boat_.x, boat_.y}, cfg_.waypoint);
    desired_ = tack_supervisor(raw, wind_dir_, boat_, cfg_.start, cfg_.waypoint,
                               tack_, cfg_.tack);
    observed_ = true;
    return {t, boat_.heading, desired_, wind_dir_, wind_.speed(), boat_.x, boat_.y};
  }

  /// Applies a rudder command for the pending observation and advances one
  /// control period (or less, if the waypoint is reached).
  void apply(double command, RudderMode mode) {
    if (!observed_) throw std::logic_error("apply() without observe()");
    if (!std::isfinite(command)) throw std::invalid_argument("rudder command not finite");
    observed_ = false;
    const double t = time();
    const double rudder = mode == RudderMode::kDelta ? boat_.rudder + command : command;
    boat_.rudder = std::clamp(rudder, -100.0, 100.0);
    trace_.push_back({t, boat_.heading, desired_, wrap_error(desired_, boat_.heading),
                      boat_.rudder, wind_dir_, boat_.x, boat_.y});

    for (int i = 0; i < substeps_; ++i) {
      const double wind = wind_.direction_at(time());
      boat_ = physics_step(boat_, wind, wind_.speed(), cfg_.physics_dt, cfg_.physics);
      ++tick_;
      if (distance_to_waypoint() <= cfg_.completion_radius) {
        completed_ = true;
        finished_ = true;
        return;
      }
    }
    if (time() + 1e-9 >= cfg_.timeout) finished_ = true;
  }

  /// Marks the episode as ended without completion (e.g. client dropped).
  void abort() { finished_ = true; }

  RunRecord record() const {
    RunRecord r;
    r.noise = noise_;
    r.seed = seed_;
    r.completed = completed_;
    r.time_taken = completed_ ? time() : cfg_.timeout;
    r.rmse = trace_.empty() ? 0.0 : rmse(trace_);
    r.trace = trace_;
    return r;
  }

 private:
  EpisodeConfig cfg_;
  NoiseLevel noise_;
  std::uint64_t seed_;
  int substeps_;
  WindProcess wind_;
  BoatState boat_;
  TackMemory tack_;
  Trace trace_;
  std::int64_t tick_ = 0;
  double wind_dir_ = 0.0;
  double desired_ = 0.0;
  bool observed_ = false;
  bool finished_ = false;
  bool completed_ = false;
};

/// Runs one episode with an in-process controller (control_period is the dt
/// handed to the controller).
inline RunRecord run_episode(Controller& controller, const EpisodeConfig& cfg,
                             NoiseLevel noise, std::uint64_t seed) {
  Episode ep(cfg, noise, seed);
  while (!ep.finished()) {
    const Observation obs = ep.observe();
    const double cmd =
        controller.step({obs.heading, obs.desired, cfg.control_period});
    ep.apply(cmd, controller.mode());
  }
  return ep.record();
}

}  // namespace fuzzysail

#endif  // FUZZYSAIL_SIM_HPP_
