#include <gtest/gtest.h>

#include "helpers.hpp"
#include "mcar/error.hpp"
#include "mcar/linalg.hpp"
#include "mcar/patterns.hpp"

using namespace mcar;

TEST(PatternSet, SortsAndRejectsDuplicates) {
  PatternSet ps(3, {{1, 0}, {2, 1}});
  EXPECT_EQ(ps[0], (std::vector<int>{0, 1}));
  EXPECT_THROW(PatternSet(3, {{0, 1}, {1, 0}}), InputError);
  EXPECT_THROW(PatternSet(3, {{0, 0}}), InputError);
  EXPECT_THROW(PatternSet(3, {{}}), InputError);
  EXPECT_THROW(PatternSet(3, {{0, 3}}), InputError);
}

TEST(PatternSet, ShrinksUnusedColumns) {
  PatternSet ps(4, {{0, 2}, {2, 3}});
  EXPECT_EQ(ps.dim(), 3);
  EXPECT_EQ(ps.retained_columns(), (std::vector<int>{0, 2, 3}));
  EXPECT_EQ(ps[1], (std::vector<int>{1, 2}));
}

TEST(PatternSet, CycleMembership) {
  auto ps = PatternSet::cycle(4);
  ASSERT_EQ(ps.size(), 4u);
  for (int j = 0; j < 4; ++j) EXPECT_EQ(ps.containing(j).size(), 2u);
  EXPECT_EQ(ps.containing_pair(0, 2).size(), 0u);
  auto one = ps.one_based();
  EXPECT_EQ(one.front(), (std::vector<int>{1, 2}));
}

TEST(Marginalize, IdentityOnThreeCycle) {
  auto seq = marginalize(Matrix::Identity(3, 3), PatternSet::cycle(3));
  ASSERT_EQ(seq.size(), 3u);
  for (const auto& b : seq.blocks()) EXPECT_TRUE(b.isApprox(Matrix::Identity(2, 2)));
}

TEST(Marginalize, SubmatrixExtraction) {
  Matrix full = Matrix::Identity(3, 3);
  full(0, 1) = full(1, 0) = 0.4;
  full(0, 0) = 2.0;
  auto seq = marginalize(full, PatternSet(3, {{0, 1}, {1, 2}}));
  EXPECT_DOUBLE_EQ(seq[0](0, 1), 0.4);
  EXPECT_DOUBLE_EQ(seq[0](0, 0), 2.0);
}

TEST(Adjoint, CountsPairMultiplicity) {
  std::mt19937_64 g(3);
  auto ps = PatternSet::cycle(4);
  Matrix x = fixtures::random_symmetric(4, g);
  Matrix back = adjoint(marginalize(x, ps));
  for (int j = 0; j < 4; ++j)
    for (int k = 0; k < 4; ++k) {
      int m = j == k ? 2 : static_cast<int>(ps.containing_pair(j, k).size());
      EXPECT_NEAR(back(j, k), m * x(j, k), 1e-12);
    }
}

TEST(Adjoint, IdentityBlocksAndSingleBlock) {
  std::vector<Matrix> id(3, Matrix::Identity(2, 2));
  EXPECT_TRUE(adjoint(MatrixSeq(PatternSet::cycle(3), id)).isApprox(2 * Matrix::Identity(3, 3)));
  Matrix b(2, 2);
  b << 0, 1, 1, 0;
  PatternSet ps(3, {{0, 1}, {1, 2}});
  Matrix a = adjoint(MatrixSeq(ps, {b, Matrix::Zero(2, 2)}));
  EXPECT_EQ(a(0, 1), 1);
  EXPECT_EQ(a(1, 0), 1);
  EXPECT_EQ(a.cwiseAbs().sum(), 2);
}

TEST(Adjoint, InnerProductIdentity) {
  std::mt19937_64 g(5);
  auto ps = std::make_shared<const PatternSet>(5, std::vector<std::vector<int>>{{0, 1, 2}, {2, 3}, {0, 3, 4}, {1, 4}});
  for (int t = 0; t < 20; ++t) {
    Matrix x = fixtures::random_symmetric(5, g);
    std::vector<Matrix> ys;
    for (std::size_t s = 0; s < ps->size(); ++s) ys.push_back(fixtures::random_symmetric((*ps)[s].size(), g));
    MatrixSeq y(ps, ys);
    EXPECT_NEAR(seq_inner(marginalize(x, ps), y), (x.array() * adjoint(y).array()).sum(), 1e-10);
  }
}

TEST(SeqInner, TrivialValuesAndSymmetry) {
  auto ps = PatternSet::cycle(3);
  MatrixSeq id(ps, std::vector<Matrix>(3, Matrix::Identity(2, 2)));
  EXPECT_DOUBLE_EQ(seq_inner(id, id), 6.0);
  EXPECT_DOUBLE_EQ(seq_inner(id * 0.0, id), 0.0);
  std::mt19937_64 g(7);
  for (int t = 0; t < 10; ++t) {
    std::vector<Matrix> a, b;
    for (int s = 0; s < 3; ++s) {
      a.push_back(fixtures::random_symmetric(2, g));
      b.push_back(fixtures::random_symmetric(2, g));
    }
    MatrixSeq A(ps, a), B(ps, b);
    EXPECT_DOUBLE_EQ(seq_inner(A, B), seq_inner(B, A));
  }
}

TEST(BarTrace, IdentityMarginalsAndMass) {
  auto ps = PatternSet(4, {{0, 1, 2}, {1, 3}, {0, 3}});
  std::vector<Matrix> id;
  for (std::size_t s = 0; s < ps.size(); ++s) id.push_back(Matrix::Identity(ps[s].size(), ps[s].size()));
  EXPECT_NEAR(bar_trace(MatrixSeq(ps, id)), 4.0, 1e-14);

  std::mt19937_64 g(11);
  Matrix x = fixtures::random_psd(4, g);
  EXPECT_NEAR(bar_trace(marginalize(x, ps)), x.trace(), 1e-12);

  // Coordinate 0 lies in two patterns: doubling its entry in one adds half.
  auto id2 = id;
  id2[0](0, 0) = 2.0;
  EXPECT_NEAR(bar_trace(MatrixSeq(ps, id2)) - 4.0, 0.5, 1e-14);
}

TEST(SeqNorms, TrivialAndHolder) {
  auto ps = PatternSet::cycle(3);
  auto n = seq_norms(MatrixSeq(ps, std::vector<Matrix>(3, Matrix::Identity(2, 2))));
  EXPECT_NEAR(n.nuclear_sum, 6.0, 1e-12);
  EXPECT_NEAR(n.spectral_max, 1.0, 1e-12);

  Vector u(2);
  u << 2.0, 0.0;
  auto r1 = seq_norms(MatrixSeq(ps, {u * u.transpose(), Matrix::Zero(2, 2), Matrix::Zero(2, 2)}));
  EXPECT_NEAR(r1.nuclear_sum, 4.0, 1e-12);
  EXPECT_NEAR(r1.spectral_max, 4.0, 1e-12);

  std::mt19937_64 g(13);
  auto ps5 = PatternSet::cycle(5);
  for (int t = 0; t < 50; ++t) {
    std::vector<Matrix> a, b;
    for (int s = 0; s < 5; ++s) {
      a.push_back(fixtures::random_symmetric(2, g));
      b.push_back(fixtures::random_symmetric(2, g));
    }
    MatrixSeq A(ps5, a), B(ps5, b);
    EXPECT_LE(std::abs(seq_inner(A, B)), seq_norms(A).nuclear_sum * seq_norms(B).spectral_max + 1e-12);
  }
}

TEST(X0Sequence, CycleAndFull) {
  auto x0 = x0_sequence(PatternSet::cycle(3));
  for (const auto& b : x0.blocks()) EXPECT_TRUE(b.isApprox(0.5 * Matrix::Identity(2, 2)));
  auto full = x0_sequence(PatternSet(4, {{0, 1, 2, 3}}));
  EXPECT_TRUE(full[0].isApprox(Matrix::Identity(4, 4)));
  PatternSet irregular(5, {{0, 1, 2}, {2, 3}, {0, 3, 4}, {1, 4}, {4}});
  EXPECT_TRUE(adjoint(x0_sequence(irregular)).isApprox(Matrix::Identity(5, 5), 1e-14));
}

TEST(CorrSeq, ValidatesAndProjects) {
  auto ps = PatternSet::cycle(3);
  Matrix bad = Matrix::Identity(2, 2);
  bad(0, 0) = 1.5;
  EXPECT_THROW(CorrSeq(ps, {bad, Matrix::Identity(2, 2), Matrix::Identity(2, 2)}), InputError);
  Matrix slight(2, 2);
  slight << 1, 1 + 1e-10, 1 + 1e-10, 1;
  CorrSeq c(ps, {slight, Matrix::Identity(2, 2), Matrix::Identity(2, 2)});
  EXPECT_GT(c.projection_distance(), 0.0);
  EXPECT_GE(linalg::min_eigenvalue(c[0]), -1e-12);
  Matrix asym = Matrix::Identity(2, 2);
  asym(0, 1) = 0.3;
  asym(1, 0) = 0.3 + 1e-11;
  MatrixSeq m(ps, {asym, asym, asym});
  EXPECT_NEAR(m.recorded_asymmetry(), 1e-11, 1e-12);
  EXPECT_EQ(m[0](0, 1), m[0](1, 0));
}

TEST(Linalg, RootsAndCorrelation) {
  std::mt19937_64 g(17);
  Matrix a = fixtures::random_psd(4, g);
  auto r = linalg::psd_sqrt(a);
  EXPECT_TRUE((r.value * r.value).isApprox(a, 1e-10));
  auto ir = linalg::psd_inv_sqrt(a);
  EXPECT_TRUE((ir.value * a * ir.value).isApprox(Matrix::Identity(4, 4), 1e-8));
  Matrix c = linalg::cov_to_corr(a);
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(c(j, j), 1.0, 1e-14);
  Matrix sing = Matrix::Ones(2, 2);
  EXPECT_GT(linalg::psd_inv_sqrt(sing).clamped, 0);
}
