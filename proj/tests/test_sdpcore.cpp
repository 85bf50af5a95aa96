#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "mcar/error.hpp"
#include "mcar/measures.hpp"
#include "mcar/sdp.hpp"

using namespace mcar;
using sdp::SolveStatus;

namespace {

CorrSeq three_cycle(double a, double b, double c) { return cycle_corr({a, b, c}); }

}  // namespace

TEST(Solve, ScalarProgram) {
  sdp::ConicProblem p;
  p.block_dims = {1};
  p.objective = {{0, 0, 0, 1.0}};
  p.constraints = {{{{0, 0, 0, 1.0}}, 0.5}};
  auto s = sdp::solve(p);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_NEAR(s.primal_objective, 0.5, 1e-8);
  EXPECT_NEAR(s.dual_objective, 0.5, 1e-8);
}

TEST(Solve, RejectsOutOfRangeEntries) {
  sdp::ConicProblem p;
  p.block_dims = {2};
  p.objective = {{0, 2, 0, 1.0}};
  EXPECT_THROW(p.validate(), InputError);
}

TEST(BuildRDual, CountsAndCompatibleValue) {
  auto corr = three_cycle(0, 0, 0);
  auto p = sdp::build_R_dual(corr);
  EXPECT_EQ(p.block_dims.size(), 1 + corr.size());
  EXPECT_EQ(p.num_constraints(), static_cast<std::size_t>((3 - 1) + 3 * 3));
  auto s = sdp::solve(p);
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_NEAR(s.primal_objective, 3.0, 1e-7);
}

TEST(BuildRDual, IncompatibleCycleBelowD) {
  auto s = sdp::solve(sdp::build_R_dual(three_cycle(-0.6, 0.6, 0.6)));
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_LT(s.primal_objective, 3.0 - 1e-3);
}

TEST(BuildRPrimal, StrongDualityOnRandomCycles) {
  std::mt19937_64 g(19);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 15; ++t) {
    auto corr = three_cycle(0.95 * u(g), 0.95 * u(g), 0.95 * u(g));
    auto dual = sdp::solve(sdp::build_R_dual(corr));
    auto primal = sdp::solve(sdp::build_R_primal(corr));
    ASSERT_EQ(dual.status, SolveStatus::optimal);
    ASSERT_EQ(primal.status, SolveStatus::optimal);
    EXPECT_NEAR(1.0 - dual.primal_objective / 3.0, 1.0 + primal.primal_objective / 3.0, 1e-7);
  }
}

TEST(BuildRPrimal, CompatibleInputGivesZero) {
  std::mt19937_64 g(23);
  auto ps = std::make_shared<const PatternSet>(PatternSet::cycle(4));
  auto corr = marginalize_corr(fixtures::random_corr(4, g), ps);
  auto s = sdp::solve(sdp::build_R_primal(corr));
  ASSERT_EQ(s.status, SolveStatus::optimal);
  EXPECT_NEAR(s.primal_objective, -4.0, 1e-6);
}

TEST(BuildRPrimal, X0IsFeasible) {
  // Y_S = X0_S with W = A*X0 - I = 0 satisfies every equality.
  auto ps = PatternSet::cycle(4);
  auto corr = cycle_corr({0.1, 0.2, 0.3, -0.4});
  auto p = sdp::build_R_primal(corr);
  auto x0 = x0_sequence(ps);
  std::vector<Matrix> blocks = x0.blocks();
  blocks.push_back(Matrix::Zero(4, 4));
  ASSERT_EQ(blocks.size(), p.block_dims.size());
  for (const auto& c : p.constraints) {
    double lhs = 0.0;
    for (const auto& e : c.entries) lhs += e.value * blocks[e.block](e.row, e.col);
    EXPECT_NEAR(lhs, c.rhs, 1e-12);
  }
}

TEST(BuildRtildeDual, RequiresNormalizedTrace) {
  auto ps = PatternSet::cycle(3);
  MatrixSeq big(ps, std::vector<Matrix>(3, 2 * Matrix::Identity(2, 2)));
  EXPECT_THROW(sdp::build_Rtilde_dual(big), InputError);
}

TEST(Solve, MaximallyIncompatibleObjectiveZero) {
  auto r = R_index(three_cycle(-1, 1, 1));
  EXPECT_NEAR(r.R, 1.0, 1e-6);
  EXPECT_TRUE(r.solver.facially_reduced);
}

TEST(FacialReduction, DetectsSingularBlocks) {
  EXPECT_TRUE(sdp::has_singular_block(three_cycle(1, 0.2, 0.3)));
  EXPECT_FALSE(sdp::has_singular_block(three_cycle(0.5, 0.2, 0.3)));
  auto red = sdp::build_reduced(three_cycle(1, 0.2, 0.3), true);
  EXPECT_EQ(red.null_directions, 1);
  EXPECT_EQ(red.sigma_basis.cols(), 2);
}

// Q is the marginal sequence of the optimal Sigma, which is usually low rank,
// so its blocks sit near the null tolerance. R(Q) must still vanish.
TEST(FacialReduction, OptimalQIsCompatible) {
  std::mt19937_64 g(12);
  auto ps = std::make_shared<const PatternSet>(5, std::vector<std::vector<int>>{{0, 2, 3, 4}, {1, 2, 3, 4}, {2, 4}});
  int near_singular = 0;
  for (int t = 0; t < 40; ++t) {
    std::vector<Matrix> blocks;
    for (std::size_t s = 0; s < ps->size(); ++s) blocks.push_back(fixtures::random_corr((*ps)[s].size(), g));
    auto r = R_index(CorrSeq(ps, blocks));
    CorrSeq q(r.Q);
    near_singular += sdp::has_singular_block(q) && !sdp::has_singular_block(q, 1e-12);
    EXPECT_LE(R_index(q).R, 1e-6) << "draw " << t;
  }
  EXPECT_GT(near_singular, 0);
}

TEST(Solve, OptimalStatusMeansSmallGap) {
  std::mt19937_64 g(29);
  std::uniform_real_distribution<double> u(0.0, std::numbers::pi);
  sdp::SolverConfig cfg;
  for (int t = 0; t < 20; ++t) {
    auto corr = cycle_corr({std::cos(u(g)), std::cos(u(g)), std::cos(u(g)), std::cos(u(g))});
    auto s = sdp::solve(sdp::build_R_dual(corr), cfg);
    if (s.status != SolveStatus::optimal) continue;
    double rel = std::abs(s.primal_objective - s.dual_objective) /
                 (1 + std::abs(s.primal_objective) + std::abs(s.dual_objective));
    EXPECT_LE(rel, cfg.rel_gap_tol * 10);
    for (const auto& b : s.primal_blocks) EXPECT_GE(Eigen::SelfAdjointEigenSolver<Matrix>(b).eigenvalues()(0), -1e-8);
  }
}

TEST(SolverConfig, HashIsStableAndSensitive) {
  sdp::SolverConfig a, b;
  EXPECT_EQ(a.hash(), b.hash());
  b.rel_gap_tol = 1e-7;
  EXPECT_NE(a.hash(), b.hash());
  b.max_iter = 0;
  EXPECT_THROW(b.validate(), InputError);
}
