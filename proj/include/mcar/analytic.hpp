#pragma once

#include <string>
#include <vector>

#include "mcar/patterns.hpp"

namespace mcar::analytic {

// Cycle correlations rho_j = cos(theta_j); edge j joins variables j and j+1
// (mod d), 0-based.
struct CycleSpec {
  std::vector<double> thetas;

  int d() const { return static_cast<int>(thetas.size()); }
  void validate() const;
  std::vector<double> rho() const;
  static CycleSpec from_rho(const std::vector<double>& rho);
};

// Sum_{K} theta - (|K| - 1) pi - Sum_{not K} theta for one odd K.
struct BarrettTerm {
  std::vector<int> K;  // 0-based edges
  double violation;
};

// Maximum over odd K in O(d).
BarrettTerm barrett_max_violation(const CycleSpec& c);
// Every odd K with positive violation (d <= 20).
std::vector<BarrettTerm> barrett_violations(const CycleSpec& c);
bool barrett_feasible(const CycleSpec& c);

struct SignReduction {
  CycleSpec reduced;
  std::vector<int> flips;  // +1 / -1 per variable
};
SignReduction reduce_signs(const CycleSpec& c);

constexpr double kSingularTol = 1e-9;

// Removes edges with |rho| >= 1 - tol while more than 3 edges remain; the
// preceding edge absorbs the sign of each removed edge.
CycleSpec collapse_singular_edges(const CycleSpec& c, double tol = kSingularTol);

struct CycleRDetail {
  double R = 0.0;
  std::string method;  // "barrett", "closed_form", "fixed_point"
  int iterations = 0;
  double residual = 0.0;
  double phi1 = 0.0;
};
CycleRDetail cycle_R_detail(const CycleSpec& c, double tol = kSingularTol);
double cycle_R(const CycleSpec& c, double tol = kSingularTol);

struct LowerBound {
  double bound = 0.0;
  double c_prime = 0.0;
  double violation = 0.0;
};
// Requires two edges with 1 - rho^2 >= cfloor.
LowerBound cycle_R_lower_bound(const CycleSpec& c, double cfloor);

struct BlockCycleSpec {
  Matrix P;
  double beta = 0.0;

  int d() const { return static_cast<int>(P.rows()); }
  void validate() const;
};

struct Block3Result {
  bool compatible;
  double lower_bound;
};
Block3Result block3_analysis(const BlockCycleSpec& b);
CorrSeq block3_corr(const BlockCycleSpec& b);

// Theta over the all-but-one family: half the largest disagreement of a pair
// correlation between two patterns other than the ones dropping the pair.
double allbutone_bounds(const CorrSeq& corr);

// Nuclear norm of the overlap difference over 2d, for {[d-2]+{d-1}, [d-2]+{d}}.
double twopattern_schatten_lb(const CorrSeq& corr);

// Closed form of R-tilde on patterns {1,2}, {1,3}. The inputs need not be
// trace-normalized; the same d / bar_trace rescaling as Rtilde_index is applied.
double twopattern_Rtilde_closed_form(double s1sq, double s2sq, double st1sq, double s3sq,
                                     double rho12, double rho13);
MatrixSeq twopattern_cov(double s1sq, double s2sq, double st1sq, double s3sq, double rho12,
                         double rho13);

}  // namespace mcar::analytic
