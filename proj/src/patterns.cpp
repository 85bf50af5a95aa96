#include "mcar/patterns.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "mcar/error.hpp"
#include "mcar/linalg.hpp"

namespace mcar {

PatternSet::PatternSet(int d, std::vector<std::vector<int>> patterns) {
  if (d < 1) throw InputError("pattern set: dimension must be positive");
  if (patterns.empty()) throw InputError("pattern set: no patterns");
  std::vector<char> used(d, 0);
  for (auto& p : patterns) {
    if (p.empty()) throw InputError("pattern set: empty pattern");
    std::sort(p.begin(), p.end());
    if (std::adjacent_find(p.begin(), p.end()) != p.end())
      throw InputError("pattern set: repeated index inside a pattern");
    if (p.front() < 0 || p.back() >= d)
      throw InputError("pattern set: index out of range");
    for (int j : p) used[j] = 1;
  }
  {
    std::set<std::vector<int>> seen(patterns.begin(), patterns.end());
    if (seen.size() != patterns.size()) throw InputError("pattern set: duplicate pattern");
  }
  std::vector<int> relabel(d, -1);
  for (int j = 0; j < d; ++j) {
    if (used[j]) {
      relabel[j] = static_cast<int>(retained_.size());
      retained_.push_back(j);
    }
  }
  d_ = static_cast<int>(retained_.size());
  for (auto& p : patterns)
    for (int& j : p) j = relabel[j];
  patterns_ = std::move(patterns);

  containing_.assign(d_, {});
  position_.assign(patterns_.size(), std::vector<int>(d_, -1));
  for (std::size_t s = 0; s < patterns_.size(); ++s) {
    for (std::size_t a = 0; a < patterns_[s].size(); ++a) {
      int j = patterns_[s][a];
      containing_[j].push_back(static_cast<int>(s));
      position_[s][j] = static_cast<int>(a);
    }
  }
}

PatternSet PatternSet::from_one_based(int d, const std::vector<std::vector<int>>& patterns) {
  auto p = patterns;
  for (auto& s : p)
    for (int& j : s) --j;
  return PatternSet(d, std::move(p));
}

PatternSet PatternSet::cycle(int d) {
  if (d < 3) throw InputError("cycle pattern needs d >= 3");
  std::vector<std::vector<int>> p;
  for (int j = 0; j < d; ++j) p.push_back({j, (j + 1) % d});
  return PatternSet(d, std::move(p));
}

PatternSet PatternSet::all_but_one(int d) {
  if (d < 3) throw InputError("all-but-one pattern needs d >= 3");
  std::vector<std::vector<int>> p;
  for (int k = 0; k < d; ++k) {
    std::vector<int> s;
    for (int j = 0; j < d; ++j)
      if (j != k) s.push_back(j);
    p.push_back(s);
  }
  return PatternSet(d, std::move(p));
}

PatternSet PatternSet::block_three_cycle(int d) {
  if (d < 1) throw InputError("block size must be positive");
  std::vector<std::vector<int>> p(3);
  for (int j = 0; j < d; ++j) {
    p[0].push_back(j);
    p[0].push_back(d + j);
    p[1].push_back(j);
    p[1].push_back(2 * d + j);
    p[2].push_back(d + j);
    p[2].push_back(2 * d + j);
  }
  return PatternSet(3 * d, std::move(p));
}

std::vector<int> PatternSet::containing_pair(int j, int k) const {
  std::vector<int> out;
  for (int s : containing_[j])
    if (position_[s][k] >= 0) out.push_back(s);
  return out;
}

std::vector<std::vector<int>> PatternSet::one_based() const {
  auto p = patterns_;
  for (auto& s : p)
    for (int& j : s) ++j;
  return p;
}

std::string PatternSet::to_json() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t s = 0; s < patterns_.size(); ++s) {
    if (s) os << ',';
    os << '[';
    for (std::size_t a = 0; a < patterns_[s].size(); ++a) {
      if (a) os << ',';
      os << patterns_[s][a] + 1;
    }
    os << ']';
  }
  os << ']';
  return os.str();
}

MatrixSeq::MatrixSeq(std::shared_ptr<const PatternSet> ps, std::vector<Matrix> blocks)
    : ps_(std::move(ps)), blocks_(std::move(blocks)) {
  if (!ps_) throw InputError("matrix sequence: null pattern set");
  if (blocks_.size() != ps_->size())
    throw InputError("matrix sequence: block count does not match pattern count");
  for (std::size_t s = 0; s < blocks_.size(); ++s) {
    auto n = static_cast<Eigen::Index>((*ps_)[s].size());
    if (blocks_[s].rows() != n || blocks_[s].cols() != n)
      throw InputError("matrix sequence: block " + std::to_string(s) + " has wrong size");
    double asym = linalg::asymmetry(blocks_[s]);
    if (asym > 1e-9 * (1.0 + linalg::max_abs_entry(blocks_[s])))
      throw InputError("matrix sequence: block " + std::to_string(s) + " is not symmetric");
    asymmetry_ = std::max(asymmetry_, asym);
    if (asym > 0) blocks_[s] = linalg::symmetrize(blocks_[s]);
  }
}

MatrixSeq::MatrixSeq(const PatternSet& ps, std::vector<Matrix> blocks)
    : MatrixSeq(std::make_shared<const PatternSet>(ps), std::move(blocks)) {}

MatrixSeq MatrixSeq::operator+(const MatrixSeq& o) const {
  if (!(patterns() == o.patterns())) throw InputError("sequence sum: pattern mismatch");
  std::vector<Matrix> b(blocks_.size());
  for (std::size_t s = 0; s < b.size(); ++s) b[s] = blocks_[s] + o.blocks_[s];
  return MatrixSeq(ps_, std::move(b));
}

MatrixSeq MatrixSeq::operator-(const MatrixSeq& o) const { return *this + o * -1.0; }

MatrixSeq MatrixSeq::operator*(double a) const {
  std::vector<Matrix> b(blocks_.size());
  for (std::size_t s = 0; s < b.size(); ++s) b[s] = a * blocks_[s];
  return MatrixSeq(ps_, std::move(b));
}

CorrSeq::CorrSeq(std::shared_ptr<const PatternSet> ps, std::vector<Matrix> blocks)
    : MatrixSeq(std::move(ps), std::move(blocks)) {
  validate();
}

CorrSeq::CorrSeq(const PatternSet& ps, std::vector<Matrix> blocks)
    : MatrixSeq(ps, std::move(blocks)) {
  validate();
}

CorrSeq::CorrSeq(const MatrixSeq& m) : MatrixSeq(m) { validate(); }

void CorrSeq::validate() {
  for (std::size_t s = 0; s < blocks_.size(); ++s) {
    Matrix& b = blocks_[s];
    for (Eigen::Index i = 0; i < b.rows(); ++i) {
      if (std::abs(b(i, i) - 1.0) > 1e-8)
        throw InputError("correlation sequence: block " + std::to_string(s) +
                         " has a non-unit diagonal");
      b(i, i) = 1.0;
    }
    double lam = linalg::min_eigenvalue(b);
    if (lam < -1e-8 * (1.0 + linalg::max_abs_entry(b)))
      throw InputError("correlation sequence: block " + std::to_string(s) + " is not PSD");
    if (lam < 0) {
      Matrix p = linalg::nearest_unit_diag_psd(b);
      projection_ = std::max(projection_, (p - b).norm());
      b = p;
    }
  }
}

MatrixSeq marginalize(const Matrix& full, std::shared_ptr<const PatternSet> ps) {
  if (full.rows() != ps->dim() || full.cols() != ps->dim())
    throw InputError("marginalize: matrix dimension does not match pattern set");
  std::vector<Matrix> blocks;
  blocks.reserve(ps->size());
  for (const auto& p : ps->patterns()) {
    auto n = static_cast<Eigen::Index>(p.size());
    Matrix b(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index c = 0; c < n; ++c) b(a, c) = full(p[a], p[c]);
    blocks.push_back(std::move(b));
  }
  return MatrixSeq(std::move(ps), std::move(blocks));
}

MatrixSeq marginalize(const Matrix& full, const PatternSet& ps) {
  return marginalize(full, std::make_shared<const PatternSet>(ps));
}

CorrSeq marginalize_corr(const Matrix& full, std::shared_ptr<const PatternSet> ps) {
  return CorrSeq(marginalize(full, std::move(ps)));
}

Matrix adjoint(const MatrixSeq& seq) {
  const auto& ps = seq.patterns();
  Matrix out = Matrix::Zero(ps.dim(), ps.dim());
  for (std::size_t s = 0; s < seq.size(); ++s) {
    const auto& p = ps[s];
    for (std::size_t a = 0; a < p.size(); ++a)
      for (std::size_t c = 0; c < p.size(); ++c) out(p[a], p[c]) += seq[s](a, c);
  }
  return out;
}

double seq_inner(const MatrixSeq& a, const MatrixSeq& b) {
  if (!(a.patterns() == b.patterns())) throw InputError("seq_inner: pattern mismatch");
  double t = 0;
  for (std::size_t s = 0; s < a.size(); ++s) t += a[s].cwiseProduct(b[s]).sum();
  return t;
}

double bar_trace(const MatrixSeq& seq) {
  const auto& ps = seq.patterns();
  double t = 0;
  for (int j = 0; j < ps.dim(); ++j) {
    const auto& sj = ps.containing(j);
    double acc = 0;
    for (int s : sj) acc += seq[s](ps.position(s, j), ps.position(s, j));
    t += acc / static_cast<double>(sj.size());
  }
  return t;
}

SeqNorms seq_norms(const MatrixSeq& seq) {
  SeqNorms n{0.0, 0.0};
  for (const auto& b : seq.blocks()) {
    n.nuclear_sum += linalg::nuclear_norm(b);
    n.spectral_max = std::max(n.spectral_max, linalg::spectral_norm(b));
  }
  return n;
}

MatrixSeq x0_sequence(std::shared_ptr<const PatternSet> ps) {
  std::vector<Matrix> blocks;
  for (const auto& p : ps->patterns()) {
    Matrix b = Matrix::Zero(p.size(), p.size());
    for (std::size_t a = 0; a < p.size(); ++a)
      b(a, a) = 1.0 / static_cast<double>(ps->containing(p[a]).size());
    blocks.push_back(b);
  }
  return MatrixSeq(std::move(ps), std::move(blocks));
}

MatrixSeq x0_sequence(const PatternSet& ps) {
  return x0_sequence(std::make_shared<const PatternSet>(ps));
}

CorrSeq cycle_corr(const std::vector<double>& rho) {
  int d = static_cast<int>(rho.size());
  auto ps = std::make_shared<const PatternSet>(PatternSet::cycle(d));
  std::vector<Matrix> blocks;
  for (int j = 0; j < d; ++j) {
    Matrix b = Matrix::Identity(2, 2);
    b(0, 1) = b(1, 0) = rho[j];
    blocks.push_back(b);
  }
  return CorrSeq(ps, std::move(blocks));
}

}  // namespace mcar
