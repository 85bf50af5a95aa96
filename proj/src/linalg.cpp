#include "mcar/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace mcar::linalg {

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> eig(const Matrix& a, bool vectors) {
  return Eigen::SelfAdjointEigenSolver<Matrix>(
      a, vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
}

}  // namespace

double min_eigenvalue(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  if (a.rows() == 1) return a(0, 0);
  return eig(a, false).eigenvalues()(0);
}

double max_abs_entry(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

double asymmetry(const Matrix& a) {
  return a.size() == 0 ? 0.0 : (a - a.transpose()).cwiseAbs().maxCoeff();
}

Matrix symmetrize(const Matrix& a) { return 0.5 * (a + a.transpose()); }

double nuclear_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return eig(a, false).eigenvalues().cwiseAbs().sum();
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return eig(a, false).eigenvalues().cwiseAbs().maxCoeff();
}

bool is_psd(const Matrix& a, double rel_tol) {
  return min_eigenvalue(a) >= -rel_tol * (1.0 + max_abs_entry(a));
}

RootResult psd_sqrt(const Matrix& a) {
  auto es = eig(a, true);
  Vector ev = es.eigenvalues();
  RootResult r;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0) {
      ev(i) = 0;
      ++r.clamped;
    }
    ev(i) = std::sqrt(ev(i));
  }
  r.value = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return r;
}

RootResult psd_inv_sqrt(const Matrix& a, double rel_floor) {
  auto es = eig(a, true);
  Vector ev = es.eigenvalues();
  RootResult r;
  double floor = rel_floor * std::max(ev.maxCoeff(), 0.0);
  if (floor <= 0) floor = rel_floor;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < floor) {
      ev(i) = floor;
      ++r.clamped;
    }
    ev(i) = 1.0 / std::sqrt(ev(i));
  }
  r.value = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return r;
}

Matrix nearest_unit_diag_psd(const Matrix& a) {
  auto es = eig(a, true);
  Vector ev = es.eigenvalues().cwiseMax(0.0);
  Matrix p = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return cov_to_corr(p);
}

Matrix cov_to_corr(const Matrix& cov) {
  Vector s = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
  Matrix c(cov.rows(), cov.cols());
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < cov.cols(); ++j) {
      double den = s(i) * s(j);
      c(i, j) = den > 0 ? cov(i, j) / den : (i == j ? 1.0 : 0.0);
    }
    c(i, i) = 1.0;
  }
  return c;
}

}  // namespace mcar::linalg
