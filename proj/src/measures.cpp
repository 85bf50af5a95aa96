#include "mcar/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mcar/error.hpp"
#include "mcar/linalg.hpp"

namespace mcar {

VecSeq::VecSeq(std::shared_ptr<const PatternSet> ps, std::vector<Vector> v)
    : ps_(std::move(ps)), v_(std::move(v)) {
  if (!ps_ || v_.size() != ps_->size()) throw InputError("vector sequence: size mismatch");
  for (std::size_t s = 0; s < v_.size(); ++s) {
    if (v_[s].size() != static_cast<Eigen::Index>((*ps_)[s].size()))
      throw InputError("vector sequence: wrong length in pattern " + std::to_string(s));
    if (!v_[s].allFinite()) throw InputError("vector sequence: non-finite entry");
  }
}

VecSeq::VecSeq(const PatternSet& ps, std::vector<Vector> v)
    : VecSeq(std::make_shared<const PatternSet>(ps), std::move(v)) {}

double VecSeq::average(int j) const {
  const auto& sj = ps_->containing(j);
  double t = 0;
  for (int s : sj) t += at(s, j);
  return t / static_cast<double>(sj.size());
}

namespace {

struct SigmaSolve {
  Matrix sigma;
  std::vector<Matrix> slack;
  std::optional<std::vector<Matrix>> Y;  // dual slack on the pattern blocks
  SolveDiagnostics diag;
};

void copy_diag(SolveDiagnostics& d, const sdp::ConicSolution& s) {
  d.status = sdp::to_string(s.status);
  d.iterations = s.iterations;
  d.primal_objective = s.primal_objective;
  d.dual_objective = s.dual_objective;
  d.gap = s.gap;
  d.primal_infeasibility = s.primal_infeasibility;
  d.dual_infeasibility = s.dual_infeasibility;
  d.message = s.message;
}

sdp::ConicSolution solve_with_retry(const sdp::ConicProblem& p, const sdp::SolverConfig& cfg,
                                    SolveDiagnostics& diag) {
  auto sol = sdp::solve(p, cfg);
  if (sol.status != sdp::SolveStatus::optimal) {
    sdp::SolverConfig alt = cfg;
    alt.equilibrate = !cfg.equilibrate;
    alt.max_iter = 2 * cfg.max_iter;
    auto sol2 = sdp::solve(p, alt);
    ++diag.retries;
    if (sol2.status == sdp::SolveStatus::optimal ||
        std::abs(sol2.gap) < std::abs(sol.gap))
      sol = std::move(sol2);
  }
  copy_diag(diag, sol);
  if (sol.status != sdp::SolveStatus::optimal) {
    bool close = std::abs(sol.gap) <= 1e-6 * (1.0 + std::abs(sol.primal_objective)) &&
                 sol.primal_infeasibility <= 1e-6 && sol.dual_infeasibility <= 1e-6;
    if (!close)
      throw NumericalError("SDP solve failed (" + diag.status + ", gap " + std::to_string(sol.gap) +
                           ", iterations " + std::to_string(sol.iterations) + ")");
    diag.inaccurate = true;
  }
  return sol;
}

// Blocks with eigenvalues at rounding level always go through facial
// reduction. Between that and kNearSingularTol the full problem is tried first:
// near-null eigenvectors are only accurate to sqrt(lambda / gap), and treating
// them as exact can shrink the face well below the true one.
constexpr double kExactSingularTol = 1e-12;
constexpr double kNearSingularTol = 1e-9;

SigmaSolve solve_full(const MatrixSeq& seq, bool equal_diag, const sdp::SolverConfig& cfg) {
  const auto& ps = seq.patterns();
  SigmaSolve out;
  sdp::ConicProblem p;
  if (equal_diag) {
    p = sdp::build_R_dual(CorrSeq(seq));
  } else {
    p = sdp::build_Rtilde_dual(seq);
  }
  auto sol = solve_with_retry(p, cfg, out.diag);
  out.sigma = sol.primal_blocks[0];
  std::vector<Matrix> Y;
  for (std::size_t s = 0; s < ps.size(); ++s) {
    out.slack.push_back(sol.primal_blocks[s + 1]);
    Y.push_back(sol.dual_slack_blocks[s + 1]);
  }
  if (!out.diag.inaccurate) out.Y = std::move(Y);
  return out;
}

SigmaSolve solve_sigma_slack(const MatrixSeq& seq, bool equal_diag, const sdp::SolverConfig& cfg) {
  const auto& ps = seq.patterns();
  const int d = ps.dim();
  if (!sdp::has_singular_block(seq, kExactSingularTol)) {
    if (!sdp::has_singular_block(seq, kNearSingularTol)) return solve_full(seq, equal_diag, cfg);
    try {
      return solve_full(seq, equal_diag, cfg);
    } catch (const NumericalError&) {
    }
  }

  SigmaSolve out;
  auto red = sdp::build_reduced(seq, equal_diag);
  out.diag.facially_reduced = true;
  out.diag.null_directions = red.null_directions;
  if (red.sigma_forced_zero || red.sigma_basis.cols() == 0) {
    out.sigma = Matrix::Zero(d, d);
    for (std::size_t s = 0; s < ps.size(); ++s) out.slack.push_back(seq[s]);
    out.diag.status = "optimal";
    out.diag.message = "Sigma forced to zero by singular blocks";
    return out;
  }
  auto sol = solve_with_retry(red.problem, cfg, out.diag);
  const Matrix& V = red.sigma_basis;
  out.sigma = V * sol.primal_blocks[0] * V.transpose();
  int blk = 1;
  for (std::size_t s = 0; s < ps.size(); ++s) {
    const Matrix& U = red.slack_bases[s];
    int n = static_cast<int>(ps[s].size());
    if (U.size() == 0 && U.rows() == 0) {
      out.slack.push_back(sol.primal_blocks[blk++]);
    } else if (U.cols() == 0) {
      out.slack.push_back(Matrix::Zero(n, n));
    } else {
      out.slack.push_back(U * sol.primal_blocks[blk++] * U.transpose());
    }
  }
  return out;
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace

IncompatibilityReport R_index(const CorrSeq& corr, const sdp::SolverConfig& cfg) {
  const auto ps = corr.pattern_ptr();
  const int d = corr.dim();
  auto sol = solve_sigma_slack(corr, true, cfg);

  IncompatibilityReport rep;
  rep.solver = sol.diag;
  rep.solver.projection_distance = corr.projection_distance();
  rep.solver.input_asymmetry = corr.recorded_asymmetry();
  rep.R = clamp01(1.0 - sol.sigma.trace() / d);
  rep.lambda_star = 1.0 - rep.R;

  if (rep.lambda_star <= 1e-7) {
    rep.maximal = true;
    rep.certificate = Matrix::Zero(d, d);
    rep.Q = marginalize(Matrix::Identity(d, d), ps);
  } else {
    Matrix s = linalg::symmetrize(sol.sigma);
    Matrix c = linalg::cov_to_corr(s);
    rep.certificate = rep.lambda_star * c;
    rep.Q = marginalize(c, ps);
  }
  if (rep.R <= 1e-7) {
    rep.Q = corr;
  } else {
    std::vector<Matrix> res;
    for (std::size_t k = 0; k < corr.size(); ++k)
      res.push_back((corr[k] - rep.lambda_star * rep.Q[k]) / rep.R);
    rep.residual = MatrixSeq(ps, std::move(res));
  }
  if (sol.Y) {
    auto x0 = x0_sequence(ps);
    std::vector<Matrix> w;
    for (std::size_t k = 0; k < corr.size(); ++k) w.push_back((*sol.Y)[k] - x0[k]);
    rep.primal_witness = MatrixSeq(ps, std::move(w));
  }
  return rep;
}

IncompatibilityReport Rtilde_index(const MatrixSeq& cov, const sdp::SolverConfig& cfg) {
  const auto ps = cov.pattern_ptr();
  const int d = cov.dim();
  for (std::size_t s = 0; s < cov.size(); ++s)
    if (!linalg::is_psd(cov[s]))
      throw InputError("R-tilde: block " + std::to_string(s) + " is not PSD");
  double t = bar_trace(cov);
  if (!(t > 0)) throw InputError("R-tilde: input has zero trace");
  double scale = d / t;
  MatrixSeq scaled = cov * scale;
  auto sol = solve_sigma_slack(scaled, false, cfg);

  IncompatibilityReport rep;
  rep.scale = scale;
  rep.solver = sol.diag;
  rep.solver.input_asymmetry = cov.recorded_asymmetry();
  rep.R = clamp01(1.0 - sol.sigma.trace() / d);
  rep.lambda_star = 1.0 - rep.R;
  Matrix s = linalg::symmetrize(sol.sigma);
  if (rep.lambda_star <= 1e-7) {
    rep.maximal = true;
    rep.certificate = Matrix::Zero(d, d);
    rep.Q = marginalize(Matrix::Identity(d, d), ps);
  } else {
    rep.certificate = s;
    rep.Q = marginalize(s, ps) * (1.0 / rep.lambda_star);
  }
  if (rep.R <= 1e-7) {
    rep.Q = scaled;
  } else {
    std::vector<Matrix> res;
    for (std::size_t k = 0; k < cov.size(); ++k)
      res.push_back((scaled[k] - rep.lambda_star * rep.Q[k]) / rep.R);
    rep.residual = MatrixSeq(ps, std::move(res));
  }
  if (sol.Y) {
    auto x0 = x0_sequence(ps);
    std::vector<Matrix> w;
    for (std::size_t k = 0; k < cov.size(); ++k) w.push_back((*sol.Y)[k] - x0[k]);
    rep.primal_witness = MatrixSeq(ps, std::move(w));
  }
  return rep;
}

double V_index(const VarSeq& vars) {
  const auto& ps = vars.patterns();
  double mn = std::numeric_limits<double>::infinity();
  for (int j = 0; j < ps.dim(); ++j) {
    double av = vars.average(j);
    if (std::abs(av - 1.0) > 1e-9)
      throw InputError("V index: variances not normalized at coordinate " + std::to_string(j + 1));
    for (int s : ps.containing(j)) mn = std::min(mn, vars.at(s, j));
  }
  for (const auto& v : vars.values())
    if ((v.array() < 0).any()) throw InputError("V index: negative variance");
  return clamp01(1.0 - mn);
}

double M_index(const MeanSeq& means) {
  const auto& ps = means.patterns();
  double m = 0;
  for (int j = 0; j < ps.dim(); ++j) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int s : ps.containing(j)) {
      lo = std::min(lo, means.at(s, j));
      hi = std::max(hi, means.at(s, j));
    }
    m = std::max(m, hi - lo);
  }
  return m;
}

NormalizedVariances normalize_variances(const VarSeq& vars) {
  const auto& ps = vars.patterns();
  NormalizedVariances out;
  out.scales.resize(ps.dim());
  for (int j = 0; j < ps.dim(); ++j) {
    out.scales(j) = vars.average(j);
    if (!(out.scales(j) > 0))
      throw InputError("normalize_variances: zero average variance at coordinate " + std::to_string(j + 1));
  }
  std::vector<Vector> v;
  for (std::size_t s = 0; s < vars.size(); ++s) {
    Vector x = vars[s];
    for (std::size_t a = 0; a < ps[s].size(); ++a) x(a) /= out.scales(ps[s][a]);
    v.push_back(x);
  }
  out.normalized = VarSeq(vars.pattern_ptr(), std::move(v));
  return out;
}

VDecomposition V_decomposition(const VarSeq& vars) {
  VDecomposition out;
  out.V = V_index(vars);
  if (out.V <= 0) return out;
  std::vector<Vector> r;
  for (const auto& v : vars.values()) r.push_back((v.array() - (1.0 - out.V)) / out.V);
  out.residual = VarSeq(vars.pattern_ptr(), std::move(r));
  return out;
}

TComponents T_index(const CorrSeq& corr, const VarSeq& vars, const MeanSeq* means,
                    const sdp::SolverConfig& cfg) {
  TComponents t;
  t.R = R_index(corr, cfg).R;
  t.V = V_index(vars);
  t.T = t.R + t.V;
  if (means) {
    t.M = M_index(*means);
    t.T += *t.M;
  }
  return t;
}

}  // namespace mcar
