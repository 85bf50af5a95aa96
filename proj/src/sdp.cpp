#include "mcar/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>

#include "mcar/error.hpp"

namespace mcar::sdp {

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::max_iter: return "max_iter";
    case SolveStatus::numerical_failure: return "numerical_failure";
  }
  return "unknown";
}

void SolverConfig::validate() const {
  if (!(rel_gap_tol > 0) || !(feas_tol > 0)) throw InputError("solver tolerances must be positive");
  if (max_iter < 1) throw InputError("solver max_iter must be at least 1");
}

std::string SolverConfig::hash() const {
  char buf[160];
  std::snprintf(buf, sizeof buf, "hkm-mehrotra-v1;gap=%.17g;feas=%.17g;iter=%d;eq=%d", rel_gap_tol,
                feas_tol, max_iter, equilibrate ? 1 : 0);
  std::uint64_t h = 1469598103934665603ULL;
  for (const char* c = buf; *c; ++c) {
    h ^= static_cast<unsigned char>(*c);
    h *= 1099511628211ULL;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
  return out;
}

void ConicProblem::validate() const {
  auto check = [&](const Entry& e) {
    if (e.block < 0 || e.block >= static_cast<int>(block_dims.size()))
      throw InputError("conic problem: entry references a missing block");
    int n = block_dims[e.block];
    if (e.row < 0 || e.col < 0 || e.row >= n || e.col >= n)
      throw InputError("conic problem: entry outside its block");
  };
  for (int n : block_dims)
    if (n < 1) throw InputError("conic problem: empty block");
  for (const auto& e : objective) check(e);
  for (const auto& c : constraints) {
    if (c.entries.empty()) throw InputError("conic problem: empty constraint");
    for (const auto& e : c.entries) check(e);
  }
}

namespace {

using Blocks = std::vector<Matrix>;

struct BlockEntry {
  int k;
  int r;
  int c;
  double v;
};

// Constraint data regrouped by block, after row scaling.
struct Data {
  std::vector<int> dims;
  int m = 0;
  int n = 0;
  std::vector<std::vector<BlockEntry>> by_block;
  Blocks C;
  Vector b;
  Vector scale;  // constraint k was divided by scale(k)
};

void add_sym(Matrix& m, int r, int c, double v) {
  if (r == c) {
    m(r, r) += v;
  } else {
    m(r, c) += 0.5 * v;
    m(c, r) += 0.5 * v;
  }
}

double dot(const Blocks& a, const Blocks& b) {
  double t = 0;
  for (std::size_t i = 0; i < a.size(); ++i) t += a[i].cwiseProduct(b[i]).sum();
  return t;
}

double fro(const Blocks& a) { return std::sqrt(dot(a, a)); }

Vector apply_A(const Data& d, const Blocks& X) {
  Vector out = Vector::Zero(d.m);
  for (std::size_t j = 0; j < d.dims.size(); ++j)
    for (const auto& e : d.by_block[j]) out(e.k) += e.v * 0.5 * (X[j](e.r, e.c) + X[j](e.c, e.r));
  return out;
}

Blocks apply_At(const Data& d, const Vector& y) {
  Blocks out(d.dims.size());
  for (std::size_t j = 0; j < d.dims.size(); ++j) {
    out[j] = Matrix::Zero(d.dims[j], d.dims[j]);
    for (const auto& e : d.by_block[j]) add_sym(out[j], e.r, e.c, e.v * y(e.k));
  }
  return out;
}

// Largest step a with X + a dX PSD (infinity when unbounded).
double max_step(const Blocks& X, const Blocks& dX) {
  double a = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < X.size(); ++j) {
    Eigen::LLT<Matrix> llt(X[j]);
    if (llt.info() != Eigen::Success) return 0.0;
    Matrix Linv = llt.matrixL().solve(Matrix::Identity(X[j].rows(), X[j].cols()));
    Matrix T = Linv * dX[j] * Linv.transpose();
    T = 0.5 * (T + T.transpose());
    double lam = T.rows() == 1 ? T(0, 0)
                               : Eigen::SelfAdjointEigenSolver<Matrix>(T, Eigen::EigenvaluesOnly)
                                     .eigenvalues()(0);
    if (lam < 0) a = std::min(a, -1.0 / lam);
  }
  return a;
}

Matrix schur(const Data& d, const Blocks& X, const Blocks& W) {
  Matrix M = Matrix::Zero(d.m, d.m);
  for (std::size_t j = 0; j < d.dims.size(); ++j) {
    const auto& ent = d.by_block[j];
    const Matrix& x = X[j];
    const Matrix& w = W[j];
    for (const auto& a : ent) {
      int p = a.r, q = a.c;
      for (const auto& b : ent) {
        int r = b.r, s = b.c;
        double t = x(q, r) * w(s, p) + x(q, s) * w(r, p) + x(p, r) * w(s, q) + x(p, s) * w(r, q);
        M(a.k, b.k) += 0.25 * a.v * b.v * t;
      }
    }
  }
  return 0.5 * (M + M.transpose());
}

Data prepare(const ConicProblem& p, bool equilibrate) {
  Data d;
  d.dims = p.block_dims;
  d.m = static_cast<int>(p.constraints.size());
  d.n = 0;
  for (int n : d.dims) d.n += n;
  d.by_block.assign(d.dims.size(), {});
  d.b.resize(d.m);
  d.scale = Vector::Ones(d.m);
  for (int k = 0; k < d.m; ++k) {
    const auto& c = p.constraints[k];
    if (equilibrate) {
      // Frobenius norm of the symmetric coefficient matrix.
      double s2 = 0;
      for (const auto& e : c.entries) s2 += (e.row == e.col ? 1.0 : 0.5) * e.value * e.value;
      d.scale(k) = s2 > 0 ? std::sqrt(s2) : 1.0;
    }
    d.b(k) = c.rhs / d.scale(k);
    for (const auto& e : c.entries)
      d.by_block[e.block].push_back({k, e.row, e.col, e.value / d.scale(k)});
  }
  d.C.resize(d.dims.size());
  for (std::size_t j = 0; j < d.dims.size(); ++j) d.C[j] = Matrix::Zero(d.dims[j], d.dims[j]);
  for (const auto& e : p.objective) add_sym(d.C[e.block], e.row, e.col, e.value);
  return d;
}

}  // namespace

ConicSolution solve(const ConicProblem& prob, const SolverConfig& cfg) {
  cfg.validate();
  prob.validate();
  const Data d = prepare(prob, cfg.equilibrate);
  const std::size_t nb = d.dims.size();

  // Starting point scaled to the data.
  Blocks X(nb), Z(nb);
  Vector y = Vector::Zero(d.m);
  {
    std::vector<double> normA(nb, 0.0);
    std::vector<double> ratio(nb, 0.0);
    for (std::size_t j = 0; j < nb; ++j) {
      std::vector<double> nk(d.m, 0.0);
      for (const auto& e : d.by_block[j]) nk[e.k] += (e.r == e.c ? 1.0 : 0.5) * e.v * e.v;
      for (int k = 0; k < d.m; ++k) {
        if (nk[k] <= 0) continue;
        double a = std::sqrt(nk[k]);
        normA[j] = std::max(normA[j], a);
        ratio[j] = std::max(ratio[j], (1.0 + std::abs(d.b(k))) / (1.0 + a));
      }
      double n = d.dims[j];
      double xi = std::max({10.0, std::sqrt(n), n * ratio[j]});
      double eta = std::max({10.0, std::sqrt(n), normA[j], d.C[j].norm()});
      X[j] = xi * Matrix::Identity(d.dims[j], d.dims[j]);
      Z[j] = eta * Matrix::Identity(d.dims[j], d.dims[j]);
    }
  }

  const double norm_b = (d.b.array() * d.scale.array()).matrix().norm();
  const double norm_C = fro(d.C);

  ConicSolution sol;
  sol.status = SolveStatus::max_iter;
  int stall = 0;
  struct Best {
    double err = std::numeric_limits<double>::infinity();
    int it = 0;
    double pobj = 0, dobj = 0, pinf = 0, dinf = 0;
    Blocks X, Z;
    Vector y;
  } best;
  for (int it = 0; it <= cfg.max_iter; ++it) {
    Vector rp = d.b - apply_A(d, X);
    Blocks AtY = apply_At(d, y);
    Blocks Rd(nb);
    for (std::size_t j = 0; j < nb; ++j) Rd[j] = d.C[j] - AtY[j] + Z[j];

    double pobj = dot(d.C, X);
    double dobj = d.b.dot(y);
    double xz = dot(X, Z);
    double pinf = (rp.array() * d.scale.array()).matrix().norm() / (1.0 + norm_b);
    double dinf = fro(Rd) / (1.0 + norm_C);

    sol.iterations = it;
    sol.primal_objective = pobj;
    sol.dual_objective = dobj;
    sol.gap = dobj - pobj;
    sol.primal_infeasibility = pinf;
    sol.dual_infeasibility = dinf;

    double tol = cfg.rel_gap_tol * (1.0 + std::abs(pobj));
    if (std::abs(dobj - pobj) <= tol && xz <= tol && pinf <= cfg.feas_tol && dinf <= cfg.feas_tol) {
      sol.status = SolveStatus::optimal;
      break;
    }
    double err = std::max({std::abs(dobj - pobj) / (1.0 + std::abs(pobj)), pinf, dinf});
    if (err < best.err) best = {err, it, pobj, dobj, pinf, dinf, X, Z, y};
    if (it == cfg.max_iter) break;

    double mu = xz / d.n;
    Blocks W(nb);
    bool ok = true;
    for (std::size_t j = 0; j < nb; ++j) {
      Eigen::LLT<Matrix> llt(Z[j]);
      if (llt.info() != Eigen::Success) {
        ok = false;
        break;
      }
      W[j] = llt.solve(Matrix::Identity(d.dims[j], d.dims[j]));
      W[j] = 0.5 * (W[j] + W[j].transpose());
    }
    if (!ok) {
      sol.status = SolveStatus::numerical_failure;
      sol.message = "dual slack lost definiteness";
      break;
    }

    Matrix M = schur(d, X, W);
    Eigen::LLT<Matrix> chol(M);
    if (chol.info() != Eigen::Success) {
      double reg = 1e-14 * std::max(1.0, M.diagonal().maxCoeff());
      for (int tries = 0; tries < 6 && chol.info() != Eigen::Success; ++tries, reg *= 100) {
        chol.compute(M + reg * Matrix::Identity(d.m, d.m));
      }
      if (chol.info() != Eigen::Success) {
        sol.status = SolveStatus::numerical_failure;
        sol.message = "Schur complement not positive definite";
        break;
      }
    }

    // Base term shared by predictor and corrector: -X + X Rd W.
    Blocks XRW(nb);
    for (std::size_t j = 0; j < nb; ++j) XRW[j] = X[j] * Rd[j] * W[j];

    auto direction = [&](double sigma_mu, const Blocks* corr, Blocks& dX, Vector& dy, Blocks& dZ) {
      Blocks G(nb);
      for (std::size_t j = 0; j < nb; ++j) {
        G[j] = sigma_mu * W[j] - X[j] + XRW[j];
        if (corr) G[j] -= (*corr)[j];
      }
      Vector rhs = apply_A(d, G) - rp;
      dy = chol.solve(rhs);
      dZ = apply_At(d, dy);
      for (std::size_t j = 0; j < nb; ++j) dZ[j] -= Rd[j];
      dX.resize(nb);
      for (std::size_t j = 0; j < nb; ++j) {
        Matrix t = sigma_mu * W[j] - X[j] - X[j] * dZ[j] * W[j];
        if (corr) t -= (*corr)[j];
        dX[j] = 0.5 * (t + t.transpose());
      }
    };

    Blocks dXa, dZa;
    Vector dya;
    direction(0.0, nullptr, dXa, dya, dZa);
    double ap = std::min(1.0, max_step(X, dXa));
    double ad = std::min(1.0, max_step(Z, dZa));
    double mu_aff = 0;
    for (std::size_t j = 0; j < nb; ++j)
      mu_aff += (X[j] + ap * dXa[j]).cwiseProduct(Z[j] + ad * dZa[j]).sum();
    mu_aff /= d.n;
    double sigma = std::clamp(std::pow(std::max(mu_aff, 0.0) / mu, 3.0), 0.0, 1.0);

    Blocks corr(nb);
    for (std::size_t j = 0; j < nb; ++j) corr[j] = dXa[j] * dZa[j] * W[j];
    Blocks dX, dZ;
    Vector dy;
    direction(sigma * mu, &corr, dX, dy, dZ);

    double gamma = 0.9 + 0.09 * std::min(ap, ad);
    double sp = std::min(1.0, gamma * max_step(X, dX));
    double sd = std::min(1.0, gamma * max_step(Z, dZ));
    if (!std::isfinite(sp) || !std::isfinite(sd) || dy.hasNaN()) {
      sol.status = SolveStatus::numerical_failure;
      sol.message = "non-finite search direction";
      break;
    }
    // Backtrack when rounding pushes the new iterate out of the cone.
    Blocks Xn(nb), Zn(nb);
    bool inside = false;
    for (int bt = 0; bt < 30 && !inside; ++bt) {
      inside = true;
      for (std::size_t j = 0; j < nb && inside; ++j) {
        Xn[j] = X[j] + sp * dX[j];
        Xn[j] = 0.5 * (Xn[j] + Xn[j].transpose());
        Zn[j] = Z[j] + sd * dZ[j];
        Zn[j] = 0.5 * (Zn[j] + Zn[j].transpose());
        inside = Eigen::LLT<Matrix>(Xn[j]).info() == Eigen::Success &&
                 Eigen::LLT<Matrix>(Zn[j]).info() == Eigen::Success;
      }
      if (!inside) {
        sp *= 0.8;
        sd *= 0.8;
      }
    }
    if (!inside) {
      sol.status = SolveStatus::numerical_failure;
      sol.message = "iterate left the cone";
      break;
    }
    X = std::move(Xn);
    Z = std::move(Zn);
    y += sd * dy;

    stall = (sp < 1e-8 && sd < 1e-8) ? stall + 1 : 0;
    if (stall >= 3) {
      sol.status = SolveStatus::numerical_failure;
      sol.message = "no progress";
      break;
    }
  }

  if (sol.status != SolveStatus::optimal && best.it < sol.iterations && std::isfinite(best.err)) {
    // Report the most accurate iterate seen instead of the last one.
    X = best.X;
    Z = best.Z;
    y = best.y;
    sol.primal_objective = best.pobj;
    sol.dual_objective = best.dobj;
    sol.gap = best.dobj - best.pobj;
    sol.primal_infeasibility = best.pinf;
    sol.dual_infeasibility = best.dinf;
  }
  sol.primal_blocks = X;
  sol.dual_slack_blocks = Z;
  sol.dual_multipliers = (y.array() / d.scale.array()).matrix();
  return sol;
}

}  // namespace mcar::sdp
