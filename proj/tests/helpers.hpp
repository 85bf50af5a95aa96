#pragma once

#include <random>

#include <Eigen/Dense>

namespace mcar::fixtures {

inline Eigen::MatrixXd random_symmetric(int d, std::mt19937_64& g) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) a(i, j) = z(g);
  return (a + a.transpose()) / 2;
}

// Random correlation matrix from a Gaussian factor with k columns.
inline Eigen::MatrixXd random_corr(int d, std::mt19937_64& g, int k = -1) {
  std::normal_distribution<double> z;
  if (k < 0) k = d + 1;
  Eigen::MatrixXd f(d, k);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < k; ++j) f(i, j) = z(g);
  Eigen::MatrixXd c = f * f.transpose();
  Eigen::VectorXd s = c.diagonal().cwiseSqrt().cwiseInverse();
  return s.asDiagonal() * c * s.asDiagonal();
}

inline Eigen::MatrixXd random_psd(int d, std::mt19937_64& g) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd f(d, d + 1);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j <= d; ++j) f(i, j) = z(g);
  return f * f.transpose() / (d + 1);
}

}  // namespace mcar::fixtures
