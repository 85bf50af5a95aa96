#pragma once

#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mcar {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// The collection of observed-variable subsets. Indices are 0-based here and
// 1-based in serialized form.
class PatternSet {
 public:
  PatternSet() = default;

  // Patterns are sorted on entry. Columns that appear in no pattern are
  // removed and the remaining ones relabelled; retained_columns() maps the
  // new labels back.
  PatternSet(int d, std::vector<std::vector<int>> patterns);

  static PatternSet from_one_based(int d, const std::vector<std::vector<int>>& patterns);
  static PatternSet cycle(int d);              // {j, j+1 mod d}
  static PatternSet all_but_one(int d);        // [d] \ {j}
  static PatternSet block_three_cycle(int d);  // three d-blocks, pairwise

  int dim() const { return d_; }
  std::size_t size() const { return patterns_.size(); }
  const std::vector<int>& operator[](std::size_t s) const { return patterns_[s]; }
  const std::vector<std::vector<int>>& patterns() const { return patterns_; }

  // Indices of patterns containing j (the set S_j).
  const std::vector<int>& containing(int j) const { return containing_[j]; }
  // Patterns containing both j and k.
  std::vector<int> containing_pair(int j, int k) const;
  // Local position of j inside pattern s, or -1.
  int position(std::size_t s, int j) const { return position_[s][j]; }

  const std::vector<int>& retained_columns() const { return retained_; }
  std::vector<std::vector<int>> one_based() const;
  std::string to_json() const;

  bool operator==(const PatternSet& o) const {
    return d_ == o.d_ && patterns_ == o.patterns_;
  }

 private:
  int d_ = 0;
  std::vector<std::vector<int>> patterns_;
  std::vector<std::vector<int>> containing_;
  std::vector<std::vector<int>> position_;
  std::vector<int> retained_;
};

// Per-pattern symmetric matrices. Blocks are symmetrized on construction.
class MatrixSeq {
 public:
  MatrixSeq() = default;
  MatrixSeq(std::shared_ptr<const PatternSet> ps, std::vector<Matrix> blocks);
  MatrixSeq(const PatternSet& ps, std::vector<Matrix> blocks);

  const PatternSet& patterns() const { return *ps_; }
  std::shared_ptr<const PatternSet> pattern_ptr() const { return ps_; }
  std::size_t size() const { return blocks_.size(); }
  const Matrix& operator[](std::size_t s) const { return blocks_[s]; }
  const std::vector<Matrix>& blocks() const { return blocks_; }
  int dim() const { return ps_->dim(); }

  double recorded_asymmetry() const { return asymmetry_; }

  MatrixSeq operator+(const MatrixSeq& o) const;
  MatrixSeq operator-(const MatrixSeq& o) const;
  MatrixSeq operator*(double a) const;

 protected:
  std::shared_ptr<const PatternSet> ps_;
  std::vector<Matrix> blocks_;
  double asymmetry_ = 0.0;
};

// Per-pattern correlation matrices: unit diagonal, PSD within tolerance.
// Blocks whose min eigenvalue falls slightly below zero (within tolerance)
// are projected to the nearest unit-diagonal PSD matrix; the Frobenius
// distance moved is recorded.
class CorrSeq : public MatrixSeq {
 public:
  CorrSeq() = default;
  CorrSeq(std::shared_ptr<const PatternSet> ps, std::vector<Matrix> blocks);
  CorrSeq(const PatternSet& ps, std::vector<Matrix> blocks);
  explicit CorrSeq(const MatrixSeq& m);

  double projection_distance() const { return projection_; }

 private:
  void validate();
  double projection_ = 0.0;
};

MatrixSeq marginalize(const Matrix& full, const PatternSet& ps);
MatrixSeq marginalize(const Matrix& full, std::shared_ptr<const PatternSet> ps);
CorrSeq marginalize_corr(const Matrix& full, std::shared_ptr<const PatternSet> ps);
Matrix adjoint(const MatrixSeq& seq);
double seq_inner(const MatrixSeq& a, const MatrixSeq& b);
double bar_trace(const MatrixSeq& seq);

struct SeqNorms {
  double nuclear_sum;
  double spectral_max;
};
SeqNorms seq_norms(const MatrixSeq& seq);

MatrixSeq x0_sequence(const PatternSet& ps);
MatrixSeq x0_sequence(std::shared_ptr<const PatternSet> ps);

// Cycle correlation sequence with edge j joining j and j+1 (mod d).
CorrSeq cycle_corr(const std::vector<double>& rho);

}  // namespace mcar
