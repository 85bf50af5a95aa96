#pragma once

#include <Eigen/Dense>

namespace mcar::linalg {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

double min_eigenvalue(const Matrix& a);
double max_abs_entry(const Matrix& a);

// Largest |a(i,j) - a(j,i)|.
double asymmetry(const Matrix& a);
Matrix symmetrize(const Matrix& a);

double nuclear_norm(const Matrix& a);   // symmetric input
double spectral_norm(const Matrix& a);  // symmetric input

// Scale-relative PSD test: min eig >= -1e-8 (1 + max|entry|).
bool is_psd(const Matrix& a, double rel_tol = 1e-8);

struct RootResult {
  Matrix value;
  int clamped = 0;  // eigenvalues raised to the floor
};

// Symmetric square root with negative eigenvalues set to 0.
RootResult psd_sqrt(const Matrix& a);

// Symmetric inverse square root; eigenvalues below rel_floor * lambda_max are
// raised to that floor first.
RootResult psd_inv_sqrt(const Matrix& a, double rel_floor = 1e-10);

// Clamp eigenvalues at 0 and rescale to unit diagonal.
Matrix nearest_unit_diag_psd(const Matrix& a);

// Pearson correlation from a covariance matrix.
Matrix cov_to_corr(const Matrix& cov);

}  // namespace mcar::linalg
