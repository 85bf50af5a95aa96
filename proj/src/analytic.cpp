#include "mcar/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mcar/error.hpp"
#include "mcar/linalg.hpp"

namespace mcar::analytic {

namespace {
constexpr double kPi = std::numbers::pi;
}

void CycleSpec::validate() const {
  if (d() < 3) throw InputError("cycle needs at least 3 edges");
  for (double t : thetas)
    if (!(t >= 0.0 && t <= kPi)) throw InputError("cycle angle outside [0, pi]");
}

std::vector<double> CycleSpec::rho() const {
  std::vector<double> r;
  for (double t : thetas) r.push_back(std::cos(t));
  return r;
}

CycleSpec CycleSpec::from_rho(const std::vector<double>& rho) {
  CycleSpec c;
  for (double r : rho) {
    if (!(r >= -1.0 && r <= 1.0)) throw InputError("cycle correlation outside [-1, 1]");
    c.thetas.push_back(std::acos(r));
  }
  return c;
}

BarrettTerm barrett_max_violation(const CycleSpec& c) {
  // Including edge j instead of excluding it changes the value by 2 theta_j - pi.
  const int d = c.d();
  double sum = 0;
  for (double t : c.thetas) sum += t;
  std::vector<int> in;
  double value = kPi - sum;
  int best_out = -1, worst_in = -1;
  for (int j = 0; j < d; ++j) {
    double g = 2 * c.thetas[j] - kPi;
    if (g > 0) {
      in.push_back(j);
      value += g;
      if (worst_in < 0 || g < 2 * c.thetas[worst_in] - kPi) worst_in = j;
    } else if (best_out < 0 || g > 2 * c.thetas[best_out] - kPi) {
      best_out = j;
    }
  }
  if (in.size() % 2 == 0) {
    double add = best_out >= 0 ? 2 * c.thetas[best_out] - kPi : -INFINITY;
    double drop = worst_in >= 0 ? -(2 * c.thetas[worst_in] - kPi) : -INFINITY;
    if (add >= drop) {
      in.push_back(best_out);
      value += add;
    } else {
      in.erase(std::find(in.begin(), in.end(), worst_in));
      value += drop;
    }
  }
  std::sort(in.begin(), in.end());
  return {in, value};
}

std::vector<BarrettTerm> barrett_violations(const CycleSpec& c) {
  const int d = c.d();
  if (d > 20) throw InputError("per-K enumeration limited to d <= 20");
  std::vector<BarrettTerm> out;
  for (unsigned mask = 1; mask < (1u << d); ++mask) {
    int k = __builtin_popcount(mask);
    if (k % 2 == 0) continue;
    double v = -(k - 1) * kPi;
    std::vector<int> K;
    for (int j = 0; j < d; ++j) {
      if (mask & (1u << j)) {
        v += c.thetas[j];
        K.push_back(j);
      } else {
        v -= c.thetas[j];
      }
    }
    if (v > 0) out.push_back({K, v});
  }
  return out;
}

bool barrett_feasible(const CycleSpec& c) {
  c.validate();
  auto red = reduce_signs(c).reduced;
  double mx = *std::max_element(red.thetas.begin(), red.thetas.end());
  double sum = 0;
  for (double t : red.thetas) sum += t;
  return 2 * mx <= sum + 1e-14;
}

SignReduction reduce_signs(const CycleSpec& c) {
  c.validate();
  const int d = c.d();
  SignReduction out;
  out.reduced = c;
  out.flips.assign(d, 1);
  auto& th = out.reduced.thetas;
  // Flipping variable j negates edges j-1 and j.
  for (int j = d - 1; j >= 1; --j) {
    if (th[j] > kPi / 2) {
      out.flips[j] = -out.flips[j];
      th[j] = kPi - th[j];
      th[j - 1] = kPi - th[j - 1];
    }
  }
  return out;
}

CycleSpec collapse_singular_edges(const CycleSpec& c, double tol) {
  c.validate();
  CycleSpec out = c;
  auto& th = out.thetas;
  while (out.d() > 3) {
    int e = -1;
    for (int j = 0; j < out.d(); ++j)
      if (std::abs(std::cos(th[j])) >= 1.0 - tol) {
        e = j;
        break;
      }
    if (e < 0) break;
    int prev = (e + out.d() - 1) % out.d();
    if (std::cos(th[e]) < 0) th[prev] = kPi - th[prev];
    th.erase(th.begin() + e);
  }
  return out;
}

CycleRDetail cycle_R_detail(const CycleSpec& c, double tol) {
  c.validate();
  CycleSpec cc = collapse_singular_edges(c, tol);
  CycleRDetail out;

  std::vector<int> sing, reg;
  for (int j = 0; j < cc.d(); ++j)
    (std::abs(std::cos(cc.thetas[j])) >= 1.0 - tol ? sing : reg).push_back(j);
  if (!sing.empty()) {
    // A 3-cycle with singular edges: R = |rho_a - s rho_b| / 2 with s the sign
    // of a singular edge and a, b the other two edges.
    auto val = [&](int j) {
      double r = std::cos(cc.thetas[j]);
      return std::abs(r) >= 1.0 - tol ? (r > 0 ? 1.0 : -1.0) : r;
    };
    int s = sing[0];
    std::vector<int> others;
    for (int j = 0; j < 3; ++j)
      if (j != s) others.push_back(j);
    out.R = std::abs(val(others[0]) - val(s) * val(others[1])) / 2;
    out.method = "closed_form";
    return out;
  }

  CycleSpec red = reduce_signs(cc).reduced;
  auto it = std::max_element(red.thetas.begin(), red.thetas.end());
  std::rotate(red.thetas.begin(), it, red.thetas.end());
  const auto& th = red.thetas;
  double rest = 0;
  for (int j = 1; j < red.d(); ++j) rest += th[j];
  if (th[0] <= rest + 1e-14) {
    out.method = "barrett";
    return out;
  }

  const double c1 = 1.0 + std::cos(th[0]);
  auto f = [&](double phi1) {
    double ratio = (1.0 + std::cos(phi1)) / c1;
    double s = 0;
    for (int j = 1; j < red.d(); ++j) {
      double cj = 1.0 - (1.0 - std::cos(th[j])) * ratio;
      s += std::acos(std::clamp(cj, -1.0, 1.0));
    }
    return phi1 - s;
  };
  double lo = 0.0, hi = th[0];
  int iter = 0;
  for (; iter < 200 && hi - lo > 1e-15; ++iter) {
    double mid = 0.5 * (lo + hi);
    double v = f(mid);
    if (std::abs(v) < 1e-14) {
      lo = hi = mid;
      break;
    }
    (v > 0 ? hi : lo) = mid;
  }
  double phi = 0.5 * (lo + hi);
  out.phi1 = phi;
  out.iterations = iter;
  out.residual = f(phi);
  out.R = std::clamp(1.0 - c1 / (1.0 + std::cos(phi)), 0.0, 1.0);
  out.method = "fixed_point";
  return out;
}

double cycle_R(const CycleSpec& c, double tol) { return cycle_R_detail(c, tol).R; }

LowerBound cycle_R_lower_bound(const CycleSpec& c, double cfloor) {
  c.validate();
  if (!(cfloor > 0 && cfloor <= 1)) throw InputError("cfloor must lie in (0, 1]");
  int ok = 0;
  for (double t : c.thetas) {
    double r = std::cos(t);
    if (1.0 - r * r >= cfloor) ++ok;
  }
  if (ok < 2) throw InputError("lower bound needs two edges with 1 - rho^2 >= cfloor");
  LowerBound lb;
  // (cos t2 - cos t1) / (t1 - t2) is a sine at an intermediate angle, at
  // least sqrt(cfloor) on the region where both endpoints satisfy the floor.
  lb.c_prime = std::sqrt(cfloor) / 2;
  lb.violation = barrett_max_violation(c).violation;
  lb.bound = lb.c_prime * std::max(0.0, lb.violation);
  return lb;
}

void BlockCycleSpec::validate() const {
  if (P.rows() < 1 || P.rows() != P.cols()) throw InputError("block cycle: P must be square");
  if (!(beta >= 0 && beta <= 1)) throw InputError("block cycle: beta outside [0, 1]");
  Eigen::JacobiSVD<Matrix> svd(P);
  if (svd.singularValues()(0) > 1.0 + 1e-12) throw InputError("block cycle: ||P||_2 > 1");
}

Block3Result block3_analysis(const BlockCycleSpec& b) {
  b.validate();
  Eigen::JacobiSVD<Matrix> svd(b.P);
  const Vector& sv = svd.singularValues();
  double half = (1.0 - b.beta) / 2;
  Block3Result r;
  r.compatible = sv(0) * sv(0) <= half;
  double t = 0;
  for (Eigen::Index j = 0; j < sv.size(); ++j) t += std::max(0.0, sv(j) * sv(j) - half);
  r.lower_bound = 3.0 / (4.0 * b.d()) * t;
  return r;
}

CorrSeq block3_corr(const BlockCycleSpec& b) {
  b.validate();
  const int d = b.d();
  auto ps = std::make_shared<const PatternSet>(PatternSet::block_three_cycle(d));
  auto make = [&](const Matrix& off) {
    Matrix m = Matrix::Identity(2 * d, 2 * d);
    m.topRightCorner(d, d) = off;
    m.bottomLeftCorner(d, d) = off.transpose();
    return m;
  };
  // Pattern blocks list coordinates in increasing order: the first block of
  // each pattern is the lower-indexed variable group.
  return CorrSeq(ps, {make(b.P), make(-b.P), make(b.beta * Matrix::Identity(d, d))});
}

double allbutone_bounds(const CorrSeq& corr) {
  const auto& ps = corr.patterns();
  const int d = ps.dim();
  if (d < 4) throw InputError("all-but-one bound needs d >= 4");
  if (static_cast<int>(ps.size()) != d) throw InputError("pattern set is not the all-but-one family");
  std::vector<int> dropped_by(d, -1);  // pattern index dropping coordinate k
  for (std::size_t s = 0; s < ps.size(); ++s) {
    if (static_cast<int>(ps[s].size()) != d - 1)
      throw InputError("pattern set is not the all-but-one family");
    int k = 0;
    while (k < d && ps.position(s, k) >= 0) ++k;
    dropped_by[k] = static_cast<int>(s);
  }
  for (int k = 0; k < d; ++k)
    if (dropped_by[k] < 0) throw InputError("pattern set is not the all-but-one family");
  double theta = 0;
  for (int i = 0; i < d; ++i) {
    for (int j = i + 1; j < d; ++j) {
      double lo = INFINITY, hi = -INFINITY;
      for (int k = 0; k < d; ++k) {
        if (k == i || k == j) continue;
        int s = dropped_by[k];
        double r = corr[s](ps.position(s, i), ps.position(s, j));
        lo = std::min(lo, r);
        hi = std::max(hi, r);
      }
      theta = std::max(theta, 0.5 * (hi - lo));
    }
  }
  return theta;
}

double twopattern_schatten_lb(const CorrSeq& corr) {
  const auto& ps = corr.patterns();
  const int d = ps.dim();
  if (ps.size() != 2 || d < 3) throw InputError("two-pattern bound needs exactly two patterns");
  int s1 = -1, s2 = -1;
  for (int s = 0; s < 2; ++s) {
    const auto& p = ps[s];
    if (static_cast<int>(p.size()) != d - 1) throw InputError("two-pattern bound: wrong pattern family");
    for (int j = 0; j < d - 2; ++j)
      if (p[j] != j) throw InputError("two-pattern bound: wrong pattern family");
    if (p.back() == d - 2) s1 = s;
    if (p.back() == d - 1) s2 = s;
  }
  if (s1 < 0 || s2 < 0) throw InputError("two-pattern bound: wrong pattern family");
  Matrix diff = corr[s2].topLeftCorner(d - 2, d - 2) - corr[s1].topLeftCorner(d - 2, d - 2);
  return linalg::nuclear_norm(diff) / (2.0 * d);
}

double twopattern_Rtilde_closed_form(double s1sq, double s2sq, double st1sq, double s3sq,
                                     double rho12, double rho13) {
  if (!(s1sq > 0 && s2sq > 0 && st1sq > 0 && s3sq > 0))
    throw InputError("closed form needs positive variances");
  if (std::abs(rho12) > 1 || std::abs(rho13) > 1) throw InputError("closed form needs |rho| <= 1");
  if (st1sq < s1sq) throw InputError("closed form needs the second variance of X1 to be the larger; relabel");
  double trbar = (s1sq + st1sq) / 2 + s2sq + s3sq;
  double scale = 3.0 / trbar;
  double theta = std::acos(std::sqrt(s1sq / st1sq));
  double phi = std::acos(std::abs(rho13));
  double s = std::sin(std::max(theta - phi, 0.0));
  return scale * ((st1sq - s1sq) / 6 + s3sq / 3 * s * s);
}

MatrixSeq twopattern_cov(double s1sq, double s2sq, double st1sq, double s3sq, double rho12,
                         double rho13) {
  PatternSet ps(3, {{0, 1}, {0, 2}});
  Matrix a(2, 2), b(2, 2);
  a << s1sq, rho12 * std::sqrt(s1sq * s2sq), rho12 * std::sqrt(s1sq * s2sq), s2sq;
  b << st1sq, rho13 * std::sqrt(st1sq * s3sq), rho13 * std::sqrt(st1sq * s3sq), s3sq;
  return MatrixSeq(ps, {a, b});
}

}  // namespace mcar::analytic
