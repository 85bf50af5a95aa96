#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "mcar/error.hpp"
#include "mcar/estimation.hpp"

using namespace mcar;

namespace {

Dataset parse(const std::string& s) {
  std::istringstream in(s);
  return read_csv(in);
}

const double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

TEST(Csv, ParsesHeaderQuotesAndMissing) {
  auto ds = parse("a,\"b c\", d\n1,2,3\n4,NA,\n\"7\", 8 ,NaN\n");
  EXPECT_EQ(ds.rows(), 3);
  EXPECT_EQ(ds.cols(), 3);
  EXPECT_EQ(ds.names()[1], "b c");
  EXPECT_EQ(ds.names()[2], "d");
  EXPECT_EQ(ds.value(2, 0), 7.0);
  EXPECT_EQ(ds.value(2, 1), 8.0);
  EXPECT_FALSE(ds.observed(1, 1));
  EXPECT_FALSE(ds.observed(1, 2));
  EXPECT_FALSE(ds.get(2, 2).has_value());
  EXPECT_NEAR(ds.missing_fraction(), 3.0 / 9, 1e-15);
}

TEST(Csv, CustomTokensAndErrors) {
  std::istringstream in("x,y\n1,-999\n2,3\n");
  auto ds = read_csv(in, {"-999"});
  EXPECT_FALSE(ds.observed(0, 1));
  EXPECT_THROW(parse("a,b\n1,2,3\n"), InputError);
  EXPECT_THROW(parse("a,b\n1,zz\n"), InputError);
  EXPECT_THROW(parse(""), InputError);
  EXPECT_THROW(read_csv_file("/nonexistent/file.csv"), InputError);
}

TEST(Csv, RoundTrip) {
  auto ds = parse("a,b\n1.5,NA\n-2e-3,4\n");
  std::ostringstream out;
  write_csv(out, ds);
  auto back = parse(out.str());
  EXPECT_EQ(back.names(), ds.names());
  EXPECT_EQ(back.value(1, 0), ds.value(1, 0));
  EXPECT_FALSE(back.observed(0, 1));
}

TEST(SplitByPattern, CompleteData) {
  Matrix m = Matrix::Random(20, 3);
  auto g = split_by_pattern(Dataset::from_matrix(m), 5);
  ASSERT_EQ(g.ps->size(), 1u);
  EXPECT_EQ(g.data[0].rows(), 20);
}

TEST(SplitByPattern, ThresholdAndDrops) {
  Dataset ds(3, 3, {1, 2, kNaN, 3, 4, kNaN, kNaN, 5, 6});
  auto g = split_by_pattern(ds, 2);
  ASSERT_EQ(g.ps->size(), 1u);
  EXPECT_EQ(g.data[0].rows(), 2);
  ASSERT_EQ(g.dropped.size(), 1u);
  EXPECT_EQ(g.dropped[0].columns, (std::vector<int>{1, 2}));
  EXPECT_EQ(g.dropped[0].count, 1);
  EXPECT_EQ(g.ps->dim(), 2);  // column 3 no longer observed
}

TEST(SplitByPattern, EmptyRowsAndDeterminism) {
  std::mt19937_64 gen(71);
  std::bernoulli_distribution miss(0.3);
  std::normal_distribution<double> z;
  std::vector<double> v(300 * 4);
  for (auto& x : v) x = miss(gen) ? kNaN : z(gen);
  Dataset ds(300, 4, v);
  auto a = split_by_pattern(ds, 3), b = split_by_pattern(ds, 3);
  EXPECT_TRUE(*a.ps == *b.ps);
  EXPECT_EQ(a.rows, b.rows);
  for (std::size_t s = 0; s < a.data.size(); ++s) EXPECT_EQ(a.data[s], b.data[s]);
  EXPECT_GT(a.empty_rows, 0);
  int dropped = 0;
  for (const auto& d : a.dropped) dropped += d.count;
  EXPECT_EQ(a.total() + dropped + a.empty_rows, 300);
}

TEST(SampleMoments, StandardizedPatternsHaveUnitVariance) {
  std::mt19937_64 gen(73);
  std::normal_distribution<double> z;
  Matrix x(50, 2);
  for (int i = 0; i < 50; ++i) x.row(i) << z(gen), z(gen);
  x.rowwise() -= x.colwise().mean();
  for (int j = 0; j < 2; ++j) x.col(j) /= std::sqrt(x.col(j).squaredNorm() / 50);
  auto ps = std::make_shared<const PatternSet>(2, std::vector<std::vector<int>>{{0, 1}, {0}});
  auto m = sample_moments(group_from_blocks(ps, {x, x.col(0)}));
  for (std::size_t s = 0; s < ps->size(); ++s)
    for (Eigen::Index k = 0; k < m.variances[s].size(); ++k) EXPECT_NEAR(m.variances[s](k), 1.0, 1e-12);
}

TEST(SampleMoments, PerfectCorrelation) {
  Matrix x(10, 2);
  for (int i = 0; i < 10; ++i) x.row(i) << i, -3.0 * i + 1;
  auto ps = std::make_shared<const PatternSet>(2, std::vector<std::vector<int>>{{0, 1}});
  auto m = sample_moments(group_from_blocks(ps, {x}));
  EXPECT_DOUBLE_EQ(m.correlations[0](0, 1), -1.0);
}

TEST(SampleMoments, MatchesNaiveTwoPass) {
  std::mt19937_64 gen(79);
  std::normal_distribution<double> z;
  Matrix x(40, 3);
  for (int i = 0; i < 40; ++i)
    for (int j = 0; j < 3; ++j) x(i, j) = 5 + 2 * z(gen) + (j ? x(i, 0) : 0);
  auto pm = pattern_moments(x);
  for (int a = 0; a < 3; ++a) {
    double ma = 0;
    for (int i = 0; i < 40; ++i) ma += x(i, a);
    ma /= 40;
    EXPECT_NEAR(pm.mean(a), ma, 1e-12);
    for (int b = 0; b < 3; ++b) {
      double mb = 0;
      for (int i = 0; i < 40; ++i) mb += x(i, b);
      mb /= 40;
      double c = 0;
      for (int i = 0; i < 40; ++i) c += (x(i, a) - ma) * (x(i, b) - mb);
      EXPECT_NEAR(pm.cov(a, b), c / 40, 1e-12);
    }
  }
  auto ub = pattern_moments(x, true);
  EXPECT_NEAR(ub.cov(1, 1), pm.cov(1, 1) * 40 / 39, 1e-12);
}

TEST(SampleMoments, NormalizationAndSingularity) {
  std::mt19937_64 gen(83);
  std::normal_distribution<double> z;
  Matrix a(30, 2), b(30, 1);
  for (int i = 0; i < 30; ++i) {
    a.row(i) << 3 * z(gen), z(gen);
    b(i) = 3 * z(gen) + 1;
  }
  auto ps = std::make_shared<const PatternSet>(2, std::vector<std::vector<int>>{{0, 1}, {0}});
  auto m = sample_moments(group_from_blocks(ps, {a, b}));
  EXPECT_NEAR(m.variances.average(0), 1.0, 1e-12);
  EXPECT_NEAR(m.means.at(1, 0), m.raw_means.at(1, 0) / std::sqrt(m.scales(0)), 1e-12);

  Matrix sing(10, 2);
  for (int i = 0; i < 10; ++i) sing.row(i) << i, i;
  auto ps1 = std::make_shared<const PatternSet>(2, std::vector<std::vector<int>>{{0, 1}});
  MomentConfig rc;
  rc.ridge = true;
  auto r = sample_moments(group_from_blocks(ps1, {sing}), rc);
  EXPECT_EQ(r.ridge_patterns, std::vector<int>{0});
}
