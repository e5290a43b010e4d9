#ifndef FUZZYSAIL_CONFIG_HPP_
#define FUZZYSAIL_CONFIG_HPP_

// Plain-text configuration files. Grammar is documented in docs/config.md.
//
// Fuzzy system file:
//   [error] <lo> <hi>          followed by 5 lines: <label> <a> <b> <c> <d>
//   [derror] <lo> <hi>         followed by 5 lines as above
//   [rules]                    5 lines of 5 consequents (error rows, derror columns);
//                              each an index 0..4 or an output label
//   [singletons]               1 line of 5 increasing output values (percent)
//   [outputs]                  optional, 1 line of 5 output labels
//                              (default SL L K R SR); must precede [rules]
//
// Physics file: one "key value..." per line, see apply_physics_config().

#include <array>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fuzzysail/csv.hpp"
#include "fuzzysail/fuzzy.hpp"
#include "fuzzysail/sim.hpp"

namespace fuzzysail {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct ConfigLine {
  int number;
  std::vector<std::string> tokens;
};

inline std::vector<ConfigLine> tokenize(std::istream& in) {
  std::vector<ConfigLine> lines;
  std::string raw;
  int n = 0;
  while (std::getline(in, raw)) {
    ++n;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    std::istringstream ss(raw);
    std::vector<std::string> toks;
    for (std::string t; ss >> t;) toks.push_back(t);
    if (!toks.empty()) lines.push_back({n, std::move(toks)});
  }
  return lines;
}

inline double number(const ConfigLine& l, std::size_t i) {
  try {
    return csv::parse_double(l.tokens.at(i));
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(l.number) + ": expected a number at field " +
                      std::to_string(i + 1));
  }
}

inline void expect_size(const ConfigLine& l, std::size_t n) {
  if (l.tokens.size() != n) {
    throw ConfigError("line " + std::to_string(l.number) + ": expected " + std::to_string(n) +
                      " fields, got " + std::to_string(l.tokens.size()));
  }
}

}  // namespace detail

inline FuzzySystem parse_fuzzy_config(std::istream& in) {
  using detail::ConfigLine;
  const auto lines = detail::tokenize(in);
  std::optional<LinguisticVariable> error, derror;
  std::optional<RuleBase::Table> table;
  std::optional<std::array<double, kTermCount>> singletons;
  std::array<std::string, kTermCount> outputs{"SL", "L", "K", "R", "SR"};

  std::size_t i = 0;
  auto take = [&](std::size_t count) {
    if (i + count > lines.size()) throw ConfigError("unexpected end of config");
    std::vector<ConfigLine> out(lines.begin() + static_cast<std::ptrdiff_t>(i),
                                lines.begin() + static_cast<std::ptrdiff_t>(i + count));
    i += count;
    return out;
  };
  auto read_variable = [&](const ConfigLine& head, const std::string& name) {
    detail::expect_size(head, 3);
    const double lo = detail::number(head, 1), hi = detail::number(head, 2);
    std::array<Term, kTermCount> terms;
    const auto body = take(kTermCount);
    for (std::size_t k = 0; k < kTermCount; ++k) {
      detail::expect_size(body[k], 5);
      try {
        terms[k] = {body[k].tokens[0],
                    PiecewiseLinearMF(detail::number(body[k], 1), detail::number(body[k], 2),
                                      detail::number(body[k], 3), detail::number(body[k], 4))};
      } catch (const std::invalid_argument& e) {
        throw ConfigError("line " + std::to_string(body[k].number) + ": " + e.what());
      }
    }
    try {
      return LinguisticVariable(name, lo, hi, terms);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("[") + name + "]: " + e.what());
    }
  };

  while (i < lines.size()) {
    const ConfigLine head = lines[i++];
    const std::string& section = head.tokens[0];
    if (section == "[error]") {
      error = read_variable(head, "error");
    } else if (section == "[derror]") {
      derror = read_variable(head, "derror");
    } else if (section == "[outputs]") {
      detail::expect_size(head, 1);
      const auto body = take(1);
      detail::expect_size(body[0], kTermCount);
      for (std::size_t k = 0; k < kTermCount; ++k) outputs[k] = body[0].tokens[k];
    } else if (section == "[rules]") {
      detail::expect_size(head, 1);
      RuleBase::Table t{};
      const auto body = take(kTermCount);
      for (std::size_t r = 0; r < kTermCount; ++r) {
        detail::expect_size(body[r], kTermCount);
        for (std::size_t c = 0; c < kTermCount; ++c) {
          const std::string& tok = body[r].tokens[c];
          int idx = -1;
          for (std::size_t k = 0; k < kTermCount; ++k) {
            if (tok == outputs[k]) idx = static_cast<int>(k);
          }
          if (idx < 0 && tok.size() == 1 && tok[0] >= '0' && tok[0] <= '4') idx = tok[0] - '0';
          if (idx < 0) {
            throw ConfigError("line " + std::to_string(body[r].number) +
                              ": unknown consequent '" + tok + "'");
          }
          t[r][c] = idx;
        }
      }
      table = t;
    } else if (section == "[singletons]") {
      detail::expect_size(head, 1);
      const auto body = take(1);
      detail::expect_size(body[0], kTermCount);
      std::array<double, kTermCount> s{};
      for (std::size_t k = 0; k < kTermCount; ++k) s[k] = detail::number(body[0], k);
      singletons = s;
    } else {
      throw ConfigError("line " + std::to_string(head.number) + ": unknown section '" +
                        section + "'");
    }
  }
  if (!error || !derror || !table || !singletons) {
    throw ConfigError("config needs [error], [derror], [rules] and [singletons] sections");
  }
  FuzzySystem sys;
  sys.error = *error;
  sys.derror = *derror;
  try {
    sys.rules = RuleBase(*table, *singletons);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("[rules]/[singletons]: ") + e.what());
  }
  return sys;
}

inline FuzzySystem load_fuzzy_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return parse_fuzzy_config(in);
}

inline void write_fuzzy_config(std::ostream& out, const FuzzySystem& sys) {
  using csv::format_double;
  auto var = [&](const char* section, const LinguisticVariable& v) {
    out << section << ' ' << format_double(v.lo()) << ' ' << format_double(v.hi()) << '\n';
    for (const auto& t : v.terms()) {
      out << t.label << ' ' << format_double(t.mf.a()) << ' ' << format_double(t.mf.b())
          << ' ' << format_double(t.mf.c()) << ' ' << format_double(t.mf.d()) << '\n';
    }
  };
  var("[error]", sys.error);
  var("[derror]", sys.derror);
  out << "[rules]\n";
  for (const auto& row : sys.rules.table()) {
    for (std::size_t c = 0; c < kTermCount; ++c) out << (c ? " " : "") << row[c];
    out << '\n';
  }
  out << "[singletons]\n";
  for (std::size_t k = 0; k < kTermCount; ++k) {
    out << (k ? " " : "") << format_double(sys.rules.singletons()[k]);
  }
  out << '\n';
}

/// Applies "key value" overrides to an episode configuration. Keys:
/// turn_gain, speed_tau, leeway, helm, wind_from, wind_speed,
/// completion_radius, timeout, physics_dt, control_period, start_heading,
/// start_speed, waypoint <x> <y>, no_go, close_hauled, cross_track_limit,
/// and repeated "polar <twa> <factor>" lines (which replace the whole table).
inline void apply_physics_config(std::istream& in, EpisodeConfig& cfg) {
  const auto lines = detail::tokenize(in);
  bool polar_reset = false;
  for (const auto& l : lines) {
    const std::string& key = l.tokens[0];
    if (key == "polar") {
      detail::expect_size(l, 3);
      if (!polar_reset) {
        cfg.physics.polar.clear();
        polar_reset = true;
      }
      const PolarKnot knot{detail::number(l, 1), detail::number(l, 2)};
      if (!cfg.physics.polar.empty() && knot.twa <= cfg.physics.polar.back().twa) {
        throw ConfigError("line " + std::to_string(l.number) +
                          ": polar knots must have increasing angles");
      }
      cfg.physics.polar.push_back(knot);
      continue;
    }
    if (key == "waypoint") {
      detail::expect_size(l, 3);
      cfg.waypoint = {detail::number(l, 1), detail::number(l, 2)};
      continue;
    }
    detail::expect_size(l, 2);
    const double v = detail::number(l, 1);
    if (key == "turn_gain") cfg.physics.turn_gain = v;
    else if (key == "speed_tau") cfg.physics.speed_tau = v;
    else if (key == "leeway") cfg.physics.leeway = v;
    else if (key == "helm") cfg.physics.helm = v;
    else if (key == "wind_from") cfg.wind_from = v;
    else if (key == "wind_speed") cfg.wind_speed = v;
    else if (key == "completion_radius") cfg.completion_radius = v;
    else if (key == "timeout") cfg.timeout = v;
    else if (key == "physics_dt") cfg.physics_dt = v;
    else if (key == "control_period") cfg.control_period = v;
    else if (key == "start_heading") cfg.start_heading = v;
    else if (key == "start_speed") cfg.start_speed = v;
    else if (key == "no_go") cfg.tack.no_go_half_angle = v;
    else if (key == "close_hauled") cfg.tack.close_hauled_offset = v;
    else if (key == "cross_track_limit") cfg.tack.cross_track_limit = v;
    else throw ConfigError("line " + std::to_string(l.number) + ": unknown key '" + key + "'");
  }
  if (!(cfg.physics.speed_tau > 0.0)) throw ConfigError("speed_tau must be > 0");
  try {
    (void)cfg.substeps();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

inline void load_physics_config(const std::string& path, EpisodeConfig& cfg) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  apply_physics_config(in, cfg);
}

}  // namespace fuzzysail

#endif  // FUZZYSAIL_CONFIG_HPP_
