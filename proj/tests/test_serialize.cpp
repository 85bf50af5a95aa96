#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numbers>

#include "mcar/error.hpp"
#include "mcar/serialize.hpp"

using namespace mcar;
using std::numbers::pi;

TEST(ParseAngle, Forms) {
  EXPECT_DOUBLE_EQ(io::parse_angle("pi/3"), pi / 3);
  EXPECT_DOUBLE_EQ(io::parse_angle("5pi/6"), 5 * pi / 6);
  EXPECT_DOUBLE_EQ(io::parse_angle("0.25*pi"), 0.25 * pi);
  EXPECT_DOUBLE_EQ(io::parse_angle("-pi"), -pi);
  EXPECT_DOUBLE_EQ(io::parse_angle(" 1.5 "), 1.5);
  EXPECT_THROW(io::parse_angle("pie"), InputError);
  EXPECT_THROW(io::parse_angle(""), InputError);
}

TEST(Json, NonFiniteBecomesNull) {
  Vector v(2);
  v << 1.0, std::numeric_limits<double>::infinity();
  auto j = io::to_json(v);
  EXPECT_TRUE(j[1].is_null());
}

TEST(Json, PatternsAreOneBasedSourceLabels) {
  PatternSet ps(4, {{0, 2}, {2, 3}});
  auto j = io::to_json(ps);
  EXPECT_EQ(j.dump(), "[[1,3],[3,4]]");
}

TEST(Json, ConfigApplyRejectsUnknownKeys) {
  sdp::SolverConfig c;
  io::apply(io::json{{"max_iter", 50}}, c);
  EXPECT_EQ(c.max_iter, 50);
  EXPECT_THROW(io::apply(io::json{{"max_iters", 50}}, c), InputError);
  BootstrapConfig b;
  EXPECT_THROW(io::apply(io::json{{"B", 3}}, b), InputError);
}

TEST(Presets, ShippedPresetsParse) {
  int n = 0;
  for (const auto& e : std::filesystem::directory_iterator(MCAR_PRESET_DIR)) {
    if (e.path().extension() != ".json") continue;
    std::ifstream f(e.path());
    auto j = io::json::parse(f);
    auto p = io::preset_from_json(j);
    EXPECT_EQ(p.name, e.path().stem().string());
    EXPECT_FALSE(p.curves.empty());
    EXPECT_NE(p.reconstruction.find("best-effort reconstruction"), std::string::npos);
    auto back = io::preset_from_json(io::preset_to_json(p));
    EXPECT_EQ(back.curves.size(), p.curves.size());
    ++n;
  }
  EXPECT_EQ(n, 7);
}

TEST(Presets, FigureTwoLeftShape) {
  std::ifstream f(std::string(MCAR_PRESET_DIR) + "/fig2-left.json");
  auto p = io::preset_from_json(io::json::parse(f));
  ASSERT_EQ(p.curves.size(), 3u);
  const auto& c = p.curves[0];
  EXPECT_EQ(c.grid.size(), 5u);
  EXPECT_NEAR(c.grid.front(), pi / 3 + pi / 6, 1e-12);
  EXPECT_NEAR(c.grid.back(), (pi / 2 + pi) / 2, 1e-12);
  EXPECT_EQ(c.bootstrap.B, 99);
  EXPECT_EQ(c.M, 200);
  EXPECT_EQ(c.generator.n, 200);
}

TEST(Presets, BadPresetsRejected) {
  EXPECT_THROW(io::preset_from_json(io::json{{"name", "x"}}), InputError);
  io::json bad = {{"name", "x"}, {"curves", {{{"label", "a"}, {"generator", {{"family", "nope"}}}, {"grid", {1}}}}}};
  EXPECT_THROW(io::preset_from_json(bad), InputError);
  io::json extra = {{"name", "x"}, {"colour", 1}, {"curves", io::json::array()}};
  EXPECT_THROW(io::preset_from_json(extra), InputError);
}
