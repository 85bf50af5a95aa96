#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "mcar/error.hpp"
#include "mcar/hypothesis.hpp"
#include "mcar/linalg.hpp"

namespace mcar {

bool pair_coverage(const PatternSet& ps) {
  for (int j = 0; j < ps.dim(); ++j)
    for (int k = j + 1; k < ps.dim(); ++k)
      if (ps.containing_pair(j, k).empty()) return false;
  return true;
}

namespace {

std::vector<int> complement(const std::vector<int>& s, int d) {
  std::vector<int> out;
  std::size_t a = 0;
  for (int j = 0; j < d; ++j) {
    if (a < s.size() && s[a] == j) {
      ++a;
    } else {
      out.push_back(j);
    }
  }
  return out;
}

Matrix sub(const Matrix& m, const std::vector<int>& r, const std::vector<int>& c) {
  Matrix out(r.size(), c.size());
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = 0; j < c.size(); ++j) out(i, j) = m(r[i], c[j]);
  return out;
}

Vector sub(const Vector& v, const std::vector<int>& r) {
  Vector out(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) out(i) = v(r[i]);
  return out;
}

}  // namespace

double observed_loglik(const GroupedSamples& g, const Vector& mu, const Matrix& lambda) {
  const auto& ps = *g.ps;
  double ll = 0;
  for (std::size_t s = 0; s < ps.size(); ++s) {
    const auto& o = ps[s];
    Matrix L = sub(lambda, o, o);
    Eigen::LLT<Matrix> llt(L);
    if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
    double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    Matrix c = g.data[s].rowwise() - sub(mu, o).transpose();
    Matrix w = llt.matrixL().solve(c.transpose());
    const double n = static_cast<double>(c.rows());
    ll += -0.5 * (n * (o.size() * std::log(2.0 * std::numbers::pi) + logdet) + w.squaredNorm());
  }
  return ll;
}

namespace {

struct Params {
  Vector mu;
  Matrix lambda;
};

// One EM map: conditional expectations given the observed coordinates, then
// the complete-data MLE.
Params em_step(const GroupedSamples& g, const Params& p) {
  const auto& ps = *g.ps;
  const int d = ps.dim();
  const double N = g.total();
  Vector T1 = Vector::Zero(d);
  Matrix T2 = Matrix::Zero(d, d);
  for (std::size_t s = 0; s < ps.size(); ++s) {
    const auto& o = ps[s];
    const auto m = complement(o, d);
    const Matrix& x = g.data[s];
    const Eigen::Index n = x.rows();
    Matrix full(n, d);
    for (std::size_t a = 0; a < o.size(); ++a) full.col(o[a]) = x.col(a);
    if (!m.empty()) {
      Matrix Loo = sub(p.lambda, o, o);
      Matrix Lmo = sub(p.lambda, m, o);
      Eigen::LLT<Matrix> llt(Loo);
      if (llt.info() != Eigen::Success) throw NumericalError("EM: covariance block lost definiteness");
      Matrix B = llt.solve(Lmo.transpose()).transpose();  // Lmo Loo^{-1}
      Matrix C = sub(p.lambda, m, m) - B * Lmo.transpose();
      Matrix xm = (x.rowwise() - sub(p.mu, o).transpose()) * B.transpose();
      xm.rowwise() += sub(p.mu, m).transpose();
      for (std::size_t a = 0; a < m.size(); ++a) full.col(m[a]) = xm.col(a);
      for (std::size_t a = 0; a < m.size(); ++a)
        for (std::size_t b = 0; b < m.size(); ++b) T2(m[a], m[b]) += n * C(a, b);
    }
    T1 += full.colwise().sum().transpose();
    T2 += full.transpose() * full;
  }
  Params out;
  out.mu = T1 / N;
  out.lambda = linalg::symmetrize(T2 / N - out.mu * out.mu.transpose());
  return out;
}

double pnorm2(const Params& a) { return a.mu.squaredNorm() + a.lambda.squaredNorm(); }

Params combine(const Params& a, double ca, const Params& b, double cb, const Params& c, double cc) {
  return {ca * a.mu + cb * b.mu + cc * c.mu, linalg::symmetrize(ca * a.lambda + cb * b.lambda + cc * c.lambda)};
}

bool positive_definite(const Matrix& m) { return Eigen::LLT<Matrix>(m).info() == Eigen::Success; }

}  // namespace

EMResult em_mle(const GroupedSamples& g, const EMConfig& cfg) {
  const auto& ps = *g.ps;
  const int d = ps.dim();
  if (!pair_coverage(ps)) throw InputError("EM: some pair of variables is never observed together");
  if (cfg.max_iter < 1 || !(cfg.tol > 0)) throw InputError("EM: bad settings");

  // Start from per-column observed means and variances.
  Vector mu = Vector::Zero(d), cnt = Vector::Zero(d), sq = Vector::Zero(d);
  for (std::size_t s = 0; s < ps.size(); ++s)
    for (std::size_t a = 0; a < ps[s].size(); ++a) {
      mu(ps[s][a]) += g.data[s].col(a).sum();
      sq(ps[s][a]) += g.data[s].col(a).squaredNorm();
      cnt(ps[s][a]) += static_cast<double>(g.data[s].rows());
    }
  mu = mu.cwiseQuotient(cnt);
  Vector var = sq.cwiseQuotient(cnt) - mu.cwiseProduct(mu);
  for (int j = 0; j < d; ++j)
    if (!(var(j) > 0)) throw InputError("EM: column " + std::to_string(j + 1) + " is constant");
  Params cur{mu, var.asDiagonal()};

  // Each iteration is one SQUAREM cycle (two EM maps, an extrapolation, and a
  // stabilizing map), falling back to plain EM whenever the extrapolated
  // point lowers the likelihood.
  EMResult res;
  res.loglik.push_back(observed_loglik(g, cur.mu, cur.lambda));
  for (int it = 1; it <= cfg.max_iter; ++it) {
    Params p1 = em_step(g, cur);
    Params p2 = em_step(g, p1);
    Params next = p2;
    double ll_next = observed_loglik(g, p2.mu, p2.lambda);
    Params r = combine(p1, 1.0, cur, -1.0, cur, 0.0);
    Params v = combine(p2, 1.0, p1, -2.0, cur, 1.0);
    double nr = std::sqrt(pnorm2(r)), nv = std::sqrt(pnorm2(v));
    if (nv > 1e-14 * (1.0 + nr)) {
      double a = std::min(-nr / nv, -1.0);
      Params ext = combine(cur, 1.0, r, -2.0 * a, v, a * a);
      if (positive_definite(ext.lambda)) {
        try {
          Params st = em_step(g, ext);
          double ll_st = observed_loglik(g, st.mu, st.lambda);
          if (ll_st >= ll_next) {
            next = std::move(st);
            ll_next = ll_st;
          }
        } catch (const NumericalError&) {
        }
      }
    }
    double prev = res.loglik.back();
    double change = std::sqrt(pnorm2(combine(next, 1.0, cur, -1.0, cur, 0.0)));
    double size = std::sqrt(pnorm2(next));
    cur = std::move(next);
    res.loglik.push_back(ll_next);
    res.iterations = it;
    if (ll_next - prev < cfg.tol * (1.0 + std::abs(ll_next)) && change < 1e-6 * (1.0 + size)) {
      res.converged = true;
      break;
    }
  }
  res.mu = cur.mu;
  res.lambda = cur.lambda;
  if (!res.converged && cfg.require_convergence)
    throw NumericalError("EM did not converge in " + std::to_string(cfg.max_iter) + " iterations");
  return res;
}

EMResult em_mle(const Dataset& ds, const EMConfig& cfg) { return em_mle(split_by_pattern(ds, 1), cfg); }

int little_df_aug(const PatternSet& ps) {
  int f = 0;
  for (const auto& s : ps.patterns()) f += static_cast<int>(s.size() * (s.size() + 3) / 2);
  return f - ps.dim() * (ps.dim() + 3) / 2;
}

int little_df_cov(const PatternSet& ps) {
  int f = 0;
  for (const auto& s : ps.patterns()) f += static_cast<int>(s.size() * (s.size() + 1) / 2);
  return f - ps.dim() * (ps.dim() + 1) / 2;
}

double chi2_sf(double x, double df) {
  if (df <= 0) return 1.0;
  if (x <= 0) return 1.0;
  return boost::math::gamma_q(df / 2.0, x / 2.0);
}

LittleResult little_test(const GroupedSamples& g, double alpha, const EMConfig& cfg) {
  if (!(alpha > 0 && alpha < 1)) throw InputError("alpha must lie in (0,1)");
  const auto& ps = *g.ps;
  LittleResult r;
  r.alpha = alpha;
  r.em = em_mle(g, cfg);
  r.counts = g.counts();
  const double N = g.total();
  const Matrix lt = r.em.lambda * (N / (N - 1.0));
  for (std::size_t s = 0; s < ps.size(); ++s) {
    const auto& o = ps[s];
    const double n = static_cast<double>(g.data[s].rows());
    auto pm = pattern_moments(g.data[s], false);
    Vector diff = pm.mean - sub(r.em.mu, o);
    Matrix Lt = sub(lt, o, o);
    Matrix Lh = sub(r.em.lambda, o, o);
    Eigen::LDLT<Matrix> lt_f(Lt);
    r.d2 += n * diff.dot(lt_f.solve(diff));

    Matrix S = pm.cov;
    const double k = static_cast<double>(o.size());
    double floor = 1e-12 * std::max(S.trace(), 1e-300);
    if (g.data[s].rows() < static_cast<Eigen::Index>(o.size()) + 2 || linalg::min_eigenvalue(S) <= floor) {
      double lam = 1e-8 * std::max(S.diagonal().mean(), 1e-300);
      S += lam * Matrix::Identity(S.rows(), S.cols());
      r.warnings.push_back("pattern " + std::to_string(s + 1) + ": singular sample covariance, ridge " +
                           std::to_string(lam) + " added");
    }
    Eigen::LLT<Matrix> sl(S), ll(Lh);
    if (sl.info() != Eigen::Success || ll.info() != Eigen::Success)
      throw NumericalError("Little: covariance block not positive definite");
    double ld_s = 2.0 * sl.matrixL().toDenseMatrix().diagonal().array().log().sum();
    double ld_l = 2.0 * ll.matrixL().toDenseMatrix().diagonal().array().log().sum();
    double tr = ll.solve(S).trace();
    r.d2_cov += n * (tr - k - ld_s + ld_l);
  }
  r.d2 = std::max(r.d2, 0.0);
  r.d2_cov = std::max(r.d2_cov, 0.0);
  r.d2_aug = r.d2 + r.d2_cov;
  r.f = little_df_aug(ps);
  r.f_prime = little_df_cov(ps);
  int fm = -ps.dim();
  for (const auto& s : ps.patterns()) fm += static_cast<int>(s.size());
  r.f_mean = fm;
  r.p_mean = chi2_sf(r.d2, r.f_mean);
  r.p_aug = chi2_sf(r.d2_aug, r.f);
  r.p_cov = chi2_sf(r.d2_cov, r.f_prime);
  if (r.f <= 0) r.p_aug = 1.0;
  if (r.f_prime <= 0) r.p_cov = 1.0;
  r.reject_aug = r.p_aug <= alpha;
  r.reject_cov = r.p_cov <= alpha;
  return r;
}

LittleResult little_test(const Dataset& ds, double alpha, const EMConfig& cfg) {
  return little_test(split_by_pattern(ds, 1), alpha, cfg);
}

}  // namespace mcar
