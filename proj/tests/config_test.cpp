#include <gtest/gtest.h>

#include <sstream>
#include <string>

#include "fuzzysail/config.hpp"

namespace fuzzysail {
namespace {

std::string source_path(const std::string& rel) {
  return std::string(FUZZYSAIL_SOURCE_DIR) + "/" + rel;
}

TEST(FuzzyConfig, ShippedDefaultMatchesBuiltInSystem) {
  EXPECT_EQ(load_fuzzy_config(source_path("configs/default_fuzzy.cfg")), FuzzySystem{});
}

TEST(FuzzyConfig, WriteThenParseRoundTrips) {
  FuzzySystem sys;
  sys.error = sys.error.with_shapes({PiecewiseLinearMF(-180, -180, -100, -25),
                                     PiecewiseLinearMF::triangle(-100, -25.5, 0),
                                     PiecewiseLinearMF::triangle(-25.5, 0.125, 25),
                                     PiecewiseLinearMF::triangle(0.125, 25, 100),
                                     PiecewiseLinearMF(25, 100, 180, 180)});
  std::stringstream ss;
  write_fuzzy_config(ss, sys);
  EXPECT_EQ(parse_fuzzy_config(ss), sys);
}

TEST(FuzzyConfig, AlternativeTableLoadsWithItsOwnLabels) {
  const auto sys = load_fuzzy_config(source_path("configs/table1_printed.cfg"));
  EXPECT_EQ(sys.error, FuzzySystem{}.error);
  // Row LN (error), column LN (delta-error) reads "r".
  EXPECT_EQ(sys.rules.consequent(0, 0), 30.0);
  EXPECT_EQ(sys.rules.consequent(3, 0), 60.0);
  EXPECT_EQ(sys.rules.consequent(0, 4), -60.0);
  EXPECT_NE(sys.rules, FuzzySystem{}.rules);
}

TEST(FuzzyConfig, CommentsAndBlankLinesAreIgnored) {
  std::stringstream ss;
  write_fuzzy_config(ss, FuzzySystem{});
  std::stringstream commented("# header\n\n" + ss.str() + "   # trailing\n");
  EXPECT_EQ(parse_fuzzy_config(commented), FuzzySystem{});
}

std::string default_text() {
  std::stringstream ss;
  write_fuzzy_config(ss, FuzzySystem{});
  return ss.str();
}

std::string replace_once(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  if (pos != std::string::npos) s.replace(pos, from.size(), to);
  return s;
}

TEST(FuzzyConfig, Errors) {
  auto parse = [](const std::string& text) {
    std::stringstream ss(text);
    return parse_fuzzy_config(ss);
  };
  EXPECT_THROW(parse(""), ConfigError);
  EXPECT_THROW(parse("[bogus]\n"), ConfigError);
  // Truncated in the middle of a section.
  EXPECT_THROW(parse(default_text().substr(0, 40)), ConfigError);
  // Unknown consequent label.
  EXPECT_THROW(parse(replace_once(default_text(), "[rules]\n0", "[rules]\nQ")), ConfigError);
  // Non-increasing singletons.
  EXPECT_THROW(parse(replace_once(default_text(), "-60 -30 0 30 60", "-60 -30 0 0 60")),
               ConfigError);
  // Unordered term points.
  EXPECT_THROW(parse(replace_once(default_text(), "N -90 -30 -30 0", "N -90 -20 -30 0")),
               ConfigError);
  // Missing field.
  EXPECT_THROW(parse(replace_once(default_text(), "Z -30 0 0 30", "Z -30 0 0")), ConfigError);
  EXPECT_THROW(load_fuzzy_config("/nonexistent/path.cfg"), ConfigError);
}

TEST(PhysicsConfig, OverridesKeys) {
  EpisodeConfig cfg;
  std::stringstream ss(
      "helm 0\nleeway 0.1 # comment\nwind_from 300\nwaypoint 10 -20\n"
      "polar 0 0\npolar 90 1\npolar 180 0.5\ntimeout 100\n");
  apply_physics_config(ss, cfg);
  EXPECT_EQ(cfg.physics.helm, 0.0);
  EXPECT_EQ(cfg.physics.leeway, 0.1);
  EXPECT_EQ(cfg.wind_from, 300.0);
  EXPECT_EQ(cfg.waypoint.x, 10.0);
  EXPECT_EQ(cfg.waypoint.y, -20.0);
  ASSERT_EQ(cfg.physics.polar.size(), 3u);
  EXPECT_EQ(cfg.physics.polar[1].factor, 1.0);
  EXPECT_EQ(cfg.timeout, 100.0);
}

TEST(PhysicsConfig, Errors) {
  auto apply = [](const std::string& text) {
    EpisodeConfig cfg;
    std::stringstream ss(text);
    apply_physics_config(ss, cfg);
  };
  EXPECT_THROW(apply("unknown 1\n"), ConfigError);
  EXPECT_THROW(apply("helm x\n"), ConfigError);
  EXPECT_THROW(apply("polar 90 1\npolar 45 0\n"), ConfigError);
  EXPECT_THROW(apply("speed_tau 0\n"), ConfigError);
  EXPECT_THROW(apply("physics_dt 0.3\n"), ConfigError);
}

}  // namespace
}  // namespace fuzzysail
