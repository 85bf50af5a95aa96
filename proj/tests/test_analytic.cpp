#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "mcar/analytic.hpp"
#include "mcar/error.hpp"
#include "mcar/measures.hpp"

using namespace mcar;
using namespace mcar::analytic;
using std::numbers::pi;

namespace {

double sdp_R(const CycleSpec& c) { return R_index(cycle_corr(c.rho())).R; }

CycleSpec random_cycle(int d, std::mt19937_64& g) {
  std::uniform_real_distribution<double> u(0.0, pi);
  CycleSpec c;
  for (int j = 0; j < d; ++j) c.thetas.push_back(u(g));
  return c;
}

}  // namespace

TEST(Barrett, Examples) {
  EXPECT_TRUE(barrett_feasible({{pi / 3, pi / 3, pi / 3}}));
  CycleSpec bad{{5 * pi / 6, pi / 6, pi / 6}};
  EXPECT_FALSE(barrett_feasible(bad));
  auto v = barrett_violations(bad);
  ASSERT_EQ(v.size(), 1u);
  EXPECT_EQ(v[0].K, std::vector<int>{0});
  EXPECT_NEAR(v[0].violation, 5 * pi / 6 - pi / 3, 1e-12);
  EXPECT_TRUE(barrett_feasible({{0, 0, 0, 0}}));
}

TEST(Barrett, MaxViolationMatchesEnumeration) {
  std::mt19937_64 g(47);
  for (int t = 0; t < 50; ++t) {
    auto c = random_cycle(3 + t % 5, g);
    auto top = barrett_max_violation(c);
    auto all = barrett_violations(c);
    if (all.empty()) {
      EXPECT_LE(top.violation, 1e-12);
    } else {
      double m = 0;
      for (const auto& a : all) m = std::max(m, a.violation);
      EXPECT_NEAR(top.violation, m, 1e-12);
    }
  }
}

TEST(ReduceSigns, IdentityAndTwoLargeAngles) {
  CycleSpec one{{2.5, 0.3, 0.4}};
  auto r = reduce_signs(one);
  EXPECT_EQ(r.reduced.thetas, one.thetas);
  CycleSpec two{{2 * pi / 3, 2 * pi / 3, pi / 6}};
  auto r2 = reduce_signs(two);
  int large = 0;
  for (double t : r2.reduced.thetas) large += t > pi / 2;
  EXPECT_LE(large, 1);
  EXPECT_NEAR(sdp_R(two), sdp_R(r2.reduced), 1e-6);
  // Parity of the number of obtuse angles is preserved by the flips.
  std::mt19937_64 g(53);
  for (int t = 0; t < 30; ++t) {
    auto c = random_cycle(5, g);
    int before = 0, after = 0;
    for (double x : c.thetas) before += x > pi / 2;
    for (double x : reduce_signs(c).reduced.thetas) after += x > pi / 2;
    EXPECT_EQ((before - after) % 2, 0);
  }
}

TEST(CollapseSingular, PlusAndMinusOne) {
  auto c = collapse_singular_edges({{0.4, 0.7, 1.1, 0.0}});
  EXPECT_EQ(c.thetas, (std::vector<double>{0.4, 0.7, 1.1}));
  auto m = collapse_singular_edges({{0.4, 0.7, 1.1, pi}});
  ASSERT_EQ(m.d(), 3);
  EXPECT_NEAR(std::cos(m.thetas[2]), -std::cos(1.1), 1e-12);
  CycleSpec plain{{0.4, 0.7, 1.1, 0.2}};
  EXPECT_EQ(collapse_singular_edges(plain).thetas, plain.thetas);
  EXPECT_NEAR(sdp_R({{0.4, 2.9, 1.1, pi}}), sdp_R(collapse_singular_edges({{0.4, 2.9, 1.1, pi}})), 1e-6);
}

TEST(CycleR, ExampleFourAndFeasible) {
  EXPECT_NEAR(cycle_R({{pi / 2, pi / 3, 0}}), 0.25, 1e-9);
  EXPECT_EQ(cycle_R({{pi / 3, pi / 3, pi / 3}}), 0.0);
}

TEST(CycleR, MatchesSdpOnRandomFiveCycles) {
  std::mt19937_64 g(59);
  int checked = 0;
  while (checked < 20) {
    auto c = random_cycle(5, g);
    if (barrett_feasible(c)) continue;
    EXPECT_NEAR(cycle_R(c), sdp_R(c), 1e-5);
    ++checked;
  }
}

TEST(LowerBound, DominatedBySdp) {
  EXPECT_EQ(cycle_R_lower_bound({{pi / 3, pi / 3, pi / 3}}, 0.1).bound, 0.0);
  std::mt19937_64 g(61);
  int positive = 0;
  for (int t = 0; t < 40; ++t) {
    auto c = random_cycle(4, g);
    try {
      auto lb = cycle_R_lower_bound(c, 0.1);
      EXPECT_LE(lb.bound, sdp_R(c) + 1e-6);
      positive += lb.bound > 0;
    } catch (const InputError&) {
    }
  }
  EXPECT_GT(positive, 0);
  EXPECT_GT(cycle_R_lower_bound({{2.8, 0.5, 0.6}}, 0.1).bound, 0.0);
}

TEST(Block3, Examples) {
  BlockCycleSpec half{0.5 * Matrix::Identity(3, 3), 0.0};
  auto r = block3_analysis(half);
  EXPECT_TRUE(r.compatible);
  EXPECT_EQ(r.lower_bound, 0.0);
  BlockCycleSpec strong{0.8 * Matrix::Identity(4, 4), 0.0};
  auto s = block3_analysis(strong);
  EXPECT_FALSE(s.compatible);
  EXPECT_NEAR(s.lower_bound, 0.105, 1e-12);
  EXPECT_LE(s.lower_bound, R_index(block3_corr(strong)).R + 1e-6);
}

TEST(AllButOne, ConsistentIsZeroAndDominated) {
  std::mt19937_64 g(67);
  auto ps = std::make_shared<const PatternSet>(PatternSet::all_but_one(4));
  auto corr = marginalize_corr(fixtures::random_corr(4, g), ps);
  EXPECT_NEAR(allbutone_bounds(corr), 0.0, 1e-12);
  std::normal_distribution<double> z;
  for (int t = 0; t < 10; ++t) {
    Matrix base = fixtures::random_corr(4, g, 8);
    std::vector<Matrix> blocks;
    for (int s = 0; s < 4; ++s) {
      Matrix b = marginalize(base, *ps)[s];
      Matrix e = 0.05 * fixtures::random_symmetric(3, g);
      e.diagonal().setZero();
      blocks.push_back(b + e);
    }
    CorrSeq c(ps, blocks);
    EXPECT_LE(allbutone_bounds(c), R_index(c).R + 1e-6);
  }
}

TEST(TwoPatternSchatten, Examples) {
  PatternSet ps(4, {{0, 1, 2}, {0, 1, 3}});
  std::vector<Matrix> same{Matrix::Identity(3, 3), Matrix::Identity(3, 3)};
  EXPECT_NEAR(twopattern_schatten_lb(CorrSeq(ps, same)), 0.0, 1e-14);
  Matrix a = Matrix::Identity(3, 3), b = Matrix::Identity(3, 3);
  a(0, 1) = a(1, 0) = 0.1;
  b(0, 1) = b(1, 0) = -0.1;
  // Overlap difference [[0, .2], [.2, 0]] has eigenvalues +-0.2.
  CorrSeq c(ps, {a, b});
  EXPECT_NEAR(twopattern_schatten_lb(c), 0.4 / 8, 1e-12);
  EXPECT_LE(twopattern_schatten_lb(c), R_index(c).R + 1e-6);
}

TEST(TwoPatternRtilde, ReducesAndMatchesSdp) {
  EXPECT_NEAR(twopattern_Rtilde_closed_form(1.0, 1.0, 1.0, 1.0, 0.3, 0.4), 0.0, 1e-14);
  // phi >= theta: the variance term alone.
  double v = twopattern_Rtilde_closed_form(0.8, 1.0, 1.2, 1.0, 0.0, 0.5);
  EXPECT_NEAR(v, (1.2 - 0.8) / 6 * 3 / bar_trace(twopattern_cov(0.8, 1.0, 1.2, 1.0, 0.0, 0.5)), 1e-12);
  EXPECT_NEAR(v, Rtilde_index(twopattern_cov(0.8, 1.0, 1.2, 1.0, 0.0, 0.5)).R, 1e-5);
}
