#include <cmath>

#include "mcar/error.hpp"
#include "mcar/sdp.hpp"

namespace mcar::sdp {

namespace {

// Shared part of the R and R-tilde duals: Sigma plus one slack per pattern,
// with (A Sigma)_S + Z_S = input_S entrywise on the upper triangle.
ConicProblem sigma_slack_problem(const MatrixSeq& seq) {
  const auto& ps = seq.patterns();
  const int d = ps.dim();
  ConicProblem p;
  p.block_dims.push_back(d);
  for (const auto& s : ps.patterns()) p.block_dims.push_back(static_cast<int>(s.size()));
  for (int j = 0; j < d; ++j) p.objective.push_back({0, j, j, 1.0});
  for (std::size_t s = 0; s < ps.size(); ++s) {
    const auto& pat = ps[s];
    for (std::size_t a = 0; a < pat.size(); ++a) {
      for (std::size_t c = a; c < pat.size(); ++c) {
        Constraint con;
        con.entries.push_back({0, pat[a], pat[c], 1.0});
        con.entries.push_back({static_cast<int>(s) + 1, static_cast<int>(a), static_cast<int>(c), 1.0});
        con.rhs = seq[s](a, c);
        p.constraints.push_back(std::move(con));
      }
    }
  }
  return p;
}

}  // namespace

ConicProblem build_R_dual(const CorrSeq& corr) {
  ConicProblem p = sigma_slack_problem(corr);
  const int d = corr.dim();
  std::vector<Constraint> diag;
  for (int j = 1; j < d; ++j) {
    Constraint con;
    con.entries.push_back({0, j, j, 1.0});
    con.entries.push_back({0, 0, 0, -1.0});
    diag.push_back(std::move(con));
  }
  p.constraints.insert(p.constraints.begin(), diag.begin(), diag.end());
  return p;
}

ConicProblem build_R_primal(const CorrSeq& corr) {
  const auto& ps = corr.patterns();
  const int d = ps.dim();
  const int nS = static_cast<int>(ps.size());
  ConicProblem p;
  for (const auto& s : ps.patterns()) p.block_dims.push_back(static_cast<int>(s.size()));
  p.block_dims.push_back(d);
  const int wb = nS;

  for (int s = 0; s < nS; ++s) {
    const auto& pat = ps[s];
    for (std::size_t a = 0; a < pat.size(); ++a) {
      p.objective.push_back({s, static_cast<int>(a), static_cast<int>(a), -corr[s](a, a)});
      for (std::size_t c = a + 1; c < pat.size(); ++c)
        p.objective.push_back({s, static_cast<int>(a), static_cast<int>(c), -2.0 * corr[s](a, c)});
    }
  }
  for (int j = 0; j < d; ++j) {
    for (int k = j + 1; k < d; ++k) {
      Constraint con;
      con.entries.push_back({wb, j, k, 1.0});
      for (int s : ps.containing_pair(j, k))
        con.entries.push_back({s, ps.position(s, j), ps.position(s, k), -1.0});
      p.constraints.push_back(std::move(con));
    }
  }
  Constraint tr;
  for (int j = 0; j < d; ++j) tr.entries.push_back({wb, j, j, 1.0});
  for (int s = 0; s < nS; ++s)
    for (std::size_t a = 0; a < ps[s].size(); ++a)
      tr.entries.push_back({s, static_cast<int>(a), static_cast<int>(a), -1.0});
  tr.rhs = -static_cast<double>(d);
  p.constraints.push_back(std::move(tr));
  return p;
}

ConicProblem build_Rtilde_dual(const MatrixSeq& cov) {
  double t = bar_trace(cov);
  if (std::abs(t - cov.dim()) > 1e-6)
    throw InputError("R-tilde problem needs bar_trace equal to d (got " + std::to_string(t) + ")");
  return sigma_slack_problem(cov);
}

}  // namespace mcar::sdp

namespace mcar::sdp {

namespace {

struct BlockBasis {
  Matrix range;  // eigenvectors with eigenvalues above the null threshold
  Matrix null;
  Vector lambda;  // eigenvalues on the range
};

BlockBasis split_block(const Matrix& b, double null_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(b);
  double thr = null_tol * (1.0 + b.cwiseAbs().maxCoeff());
  std::vector<int> keep, drop;
  for (Eigen::Index i = 0; i < b.rows(); ++i) (es.eigenvalues()(i) > thr ? keep : drop).push_back(i);
  BlockBasis out;
  out.range.resize(b.rows(), keep.size());
  out.lambda.resize(keep.size());
  out.null.resize(b.rows(), drop.size());
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.range.col(i) = es.eigenvectors().col(keep[i]);
    out.lambda(i) = es.eigenvalues()(keep[i]);
  }
  for (std::size_t i = 0; i < drop.size(); ++i) out.null.col(i) = es.eigenvectors().col(drop[i]);
  return out;
}

// Entries of <G, X> for a dense symmetric G in the Entry convention.
void push_dense(std::vector<Entry>& out, int block, const Matrix& g) {
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    if (std::abs(g(i, i)) > 1e-15) out.push_back({block, int(i), int(i), g(i, i)});
    for (Eigen::Index k = i + 1; k < g.cols(); ++k)
      if (std::abs(g(i, k)) > 1e-15) out.push_back({block, int(i), int(k), 2.0 * g(i, k)});
  }
}

}  // namespace

bool has_singular_block(const MatrixSeq& seq, double null_tol) {
  for (const auto& b : seq.blocks()) {
    double lam = Eigen::SelfAdjointEigenSolver<Matrix>(b, Eigen::EigenvaluesOnly).eigenvalues()(0);
    if (lam <= null_tol * (1.0 + b.cwiseAbs().maxCoeff())) return true;
  }
  return false;
}

ReducedProblem build_reduced(const MatrixSeq& seq, bool equal_diagonal, double null_tol) {
  const auto& ps = seq.patterns();
  const int d = ps.dim();
  ReducedProblem out;

  std::vector<BlockBasis> bases;
  std::vector<Vector> nulls;
  for (std::size_t s = 0; s < ps.size(); ++s) {
    bases.push_back(split_block(seq[s], null_tol));
    const Matrix& nb = bases.back().null;
    for (Eigen::Index c = 0; c < nb.cols(); ++c) {
      Vector u = Vector::Zero(d);
      for (std::size_t a = 0; a < ps[s].size(); ++a) u(ps[s][a]) = nb(a, c);
      nulls.push_back(u);
    }
  }
  out.null_directions = static_cast<int>(nulls.size());

  // V spans the orthogonal complement of all embedded null vectors.
  Matrix V;
  if (nulls.empty()) {
    V = Matrix::Identity(d, d);
  } else {
    Matrix P = Matrix::Zero(d, d);
    for (const auto& u : nulls) P += u * u.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> es(P);
    double thr = 1e-10 * std::max(1.0, es.eigenvalues().maxCoeff());
    std::vector<int> keep;
    for (int i = 0; i < d; ++i)
      if (es.eigenvalues()(i) <= thr) keep.push_back(i);
    V.resize(d, keep.size());
    for (std::size_t i = 0; i < keep.size(); ++i) V.col(i) = es.eigenvectors().col(keep[i]);
  }
  const int r = static_cast<int>(V.cols());
  out.sigma_basis = V;
  for (const auto& b : bases) out.slack_bases.push_back(b.null.cols() == 0 ? Matrix() : b.range);

  if (equal_diagonal) {
    for (int j = 0; j < d; ++j)
      if (r == 0 || V.row(j).norm() < 1e-12) out.sigma_forced_zero = true;
  }
  if (r == 0 || out.sigma_forced_zero) return out;

  ConicProblem& p = out.problem;
  p.block_dims.push_back(r);
  for (std::size_t s = 0; s < ps.size(); ++s) {
    int rs = bases[s].null.cols() == 0 ? static_cast<int>(ps[s].size()) : static_cast<int>(bases[s].range.cols());
    if (rs == 0) rs = -1;  // block entirely null; no slack and no equations
    p.block_dims.push_back(rs);
  }
  const bool identity_V = nulls.empty();
  for (int i = 0; i < r; ++i) p.objective.push_back({0, i, i, 1.0});

  if (equal_diagonal) {
    // Homogeneous constraints v_j' S v_j = v_0' S v_0, kept if independent.
    std::vector<Vector> basis;
    const int len = r * (r + 1) / 2;
    for (int j = 1; j < d; ++j) {
      Matrix g = V.row(j).transpose() * V.row(j) - V.row(0).transpose() * V.row(0);
      Vector vec(len);
      int t = 0;
      for (int i = 0; i < r; ++i)
        for (int k = i; k < r; ++k) vec(t++) = (i == k ? 1.0 : std::sqrt(2.0)) * g(i, k);
      double n0 = vec.norm();
      if (n0 < 1e-12) continue;
      for (const auto& q : basis) vec -= q.dot(vec) * q;
      if (vec.norm() <= 1e-9 * n0) continue;
      basis.push_back(vec / vec.norm());
      Constraint con;
      if (identity_V) {
        con.entries = {{0, j, j, 1.0}, {0, 0, 0, -1.0}};
      } else {
        push_dense(con.entries, 0, g);
      }
      p.constraints.push_back(std::move(con));
    }
  }

  for (std::size_t s = 0; s < ps.size(); ++s) {
    const auto& pat = ps[s];
    const int blk = static_cast<int>(s) + 1;
    const bool rotated = bases[s].null.cols() > 0;
    if (p.block_dims[blk] < 0) continue;
    const int rs = p.block_dims[blk];
    for (int a = 0; a < rs; ++a) {
      for (int b = a; b < rs; ++b) {
        Constraint con;
        // Coefficient of Sigma: E_ab in the (possibly rotated) block coordinates.
        Matrix H = Matrix::Zero(d, d);
        if (rotated) {
          Vector ua = Vector::Zero(d), ub = Vector::Zero(d);
          for (std::size_t i = 0; i < pat.size(); ++i) {
            ua(pat[i]) = bases[s].range(i, a);
            ub(pat[i]) = bases[s].range(i, b);
          }
          H = 0.5 * (ua * ub.transpose() + ub * ua.transpose());
          con.rhs = a == b ? bases[s].lambda(a) : 0.0;
        } else {
          H(pat[a], pat[b]) += 0.5;
          H(pat[b], pat[a]) += 0.5;
          con.rhs = seq[s](a, b);
        }
        if (identity_V && !rotated) {
          con.entries.push_back({0, pat[a], pat[b], 1.0});
        } else {
          push_dense(con.entries, 0, V.transpose() * H * V);
        }
        con.entries.push_back({blk, a, b, 1.0});
        p.constraints.push_back(std::move(con));
      }
    }
  }

  // Drop fully null blocks from the block list, renumbering entries.
  std::vector<int> newid(p.block_dims.size(), -1);
  std::vector<int> dims;
  for (std::size_t i = 0; i < p.block_dims.size(); ++i) {
    if (p.block_dims[i] > 0) {
      newid[i] = static_cast<int>(dims.size());
      dims.push_back(p.block_dims[i]);
    }
  }
  if (dims.size() != p.block_dims.size()) {
    for (auto& c : p.constraints)
      for (auto& e : c.entries) e.block = newid[e.block];
    for (auto& e : p.objective) e.block = newid[e.block];
    for (std::size_t s = 0; s < ps.size(); ++s)
      if (p.block_dims[s + 1] < 0) out.slack_bases[s] = Matrix::Zero(ps[s].size(), 0);
  }
  p.block_dims = dims;
  return out;
}

}  // namespace mcar::sdp
