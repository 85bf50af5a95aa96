#pragma once

#include <cmath>
#include <iosfwd>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mcar/measures.hpp"
#include "mcar/patterns.hpp"

namespace mcar {

// Rows of optionally-missing reals. Missing cells are stored as NaN.
class Dataset {
 public:
  Dataset() = default;
  Dataset(int n_rows, int d, std::vector<double> values, std::vector<std::string> names = {});
  static Dataset from_matrix(const Matrix& m);

  int rows() const { return n_; }
  int cols() const { return d_; }
  bool observed(int i, int j) const { return !std::isnan(values_[idx(i, j)]); }
  double value(int i, int j) const { return values_[idx(i, j)]; }
  std::optional<double> get(int i, int j) const {
    double v = values_[idx(i, j)];
    if (std::isnan(v)) return std::nullopt;
    return v;
  }
  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& raw() const { return values_; }

  Dataset with_missing(const std::vector<char>& mask) const;  // 1 = delete
  double missing_fraction() const;

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * d_ + j; }
  int n_ = 0;
  int d_ = 0;
  std::vector<double> values_;
  std::vector<std::string> names_;
};

const std::set<std::string>& default_na_tokens();
Dataset read_csv(std::istream& in, const std::set<std::string>& na = default_na_tokens());
Dataset read_csv_file(const std::string& path, const std::set<std::string>& na = default_na_tokens());
void write_csv(std::ostream& out, const Dataset& ds);

struct DroppedPattern {
  std::vector<int> columns;  // original 0-based columns
  int count = 0;
  std::string reason;
};

// Rows grouped by observed-column set. Patterns are ordered lexicographically
// by their column lists.
struct GroupedSamples {
  int source_cols = 0;
  std::shared_ptr<const PatternSet> ps;  // relabelled to the retained columns
  std::vector<Matrix> data;             // n_S x |S|
  std::vector<std::vector<int>> rows;   // source row indices
  std::vector<DroppedPattern> dropped;
  int empty_rows = 0;

  std::vector<int> counts() const;
  int total() const;
};

GroupedSamples split_by_pattern(const Dataset& ds, int min_count = 5);
// Same grouping from already grouped per-pattern matrices.
GroupedSamples group_from_blocks(std::shared_ptr<const PatternSet> ps, std::vector<Matrix> data);

struct MomentConfig {
  bool unbiased = false;  // n_S - 1 denominator
  bool ridge = false;
  double ridge_lambda = -1.0;  // negative: 1e-8 times the pattern's mean variance
};

struct MomentSummary {
  std::shared_ptr<const PatternSet> ps;
  std::vector<int> counts;
  MeanSeq raw_means;
  MeanSeq means;  // in normalized units (divided by sqrt(scale_j))
  VarSeq raw_variances;
  VarSeq variances;  // normalized, av_j = 1
  Vector scales;
  CorrSeq correlations;
  MatrixSeq covariances;  // normalized units
  std::vector<DroppedPattern> dropped;
  std::vector<int> ridge_patterns;
};

MomentSummary sample_moments(const GroupedSamples& g, const MomentConfig& cfg = {});

// Column mean and covariance of one pattern's data.
struct PatternMoments {
  Vector mean;
  Matrix cov;
};
PatternMoments pattern_moments(const Matrix& x, bool unbiased = false);

}  // namespace mcar
