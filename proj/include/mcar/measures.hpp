#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mcar/patterns.hpp"
#include "mcar/sdp.hpp"

namespace mcar {

// Per-pattern vectors (variances or means), one entry per coordinate of S.
class VecSeq {
 public:
  VecSeq() = default;
  VecSeq(std::shared_ptr<const PatternSet> ps, std::vector<Vector> v);
  VecSeq(const PatternSet& ps, std::vector<Vector> v);

  const PatternSet& patterns() const { return *ps_; }
  std::shared_ptr<const PatternSet> pattern_ptr() const { return ps_; }
  std::size_t size() const { return v_.size(); }
  const Vector& operator[](std::size_t s) const { return v_[s]; }
  const std::vector<Vector>& values() const { return v_; }
  // Value of coordinate j in pattern s (j must belong to s).
  double at(std::size_t s, int j) const { return v_[s](ps_->position(s, j)); }
  // av_j: mean over the patterns containing j.
  double average(int j) const;

 private:
  std::shared_ptr<const PatternSet> ps_;
  std::vector<Vector> v_;
};

using VarSeq = VecSeq;
using MeanSeq = VecSeq;

struct SolveDiagnostics {
  std::string status;
  int iterations = 0;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  bool facially_reduced = false;
  int null_directions = 0;
  int retries = 0;
  bool inaccurate = false;  // accepted at 1e-6 after the tight target failed
  double projection_distance = 0.0;
  double input_asymmetry = 0.0;
  std::string message;
};

struct IncompatibilityReport {
  double R = 0.0;
  double lambda_star = 1.0;
  MatrixSeq Q;
  std::optional<MatrixSeq> residual;
  Matrix certificate;                     // constant diagonal lambda_star for R
  std::optional<MatrixSeq> primal_witness;  // X_S = Y_S - X0_S
  bool maximal = false;                   // lambda_star below 1e-7
  double scale = 1.0;                     // R-tilde input rescaling d / bar_trace
  SolveDiagnostics solver;
};

IncompatibilityReport R_index(const CorrSeq& corr, const sdp::SolverConfig& cfg = {});
IncompatibilityReport Rtilde_index(const MatrixSeq& cov, const sdp::SolverConfig& cfg = {});

double V_index(const VarSeq& vars);
double M_index(const MeanSeq& means);

struct NormalizedVariances {
  Vector scales;
  VarSeq normalized;
};
NormalizedVariances normalize_variances(const VarSeq& vars);

// sigma^2 = (1 - V) * 1 + V * sigma'^2 with av_j(sigma'^2) = 1; residual
// absent when V = 0.
struct VDecomposition {
  double V = 0.0;
  std::optional<VarSeq> residual;
};
VDecomposition V_decomposition(const VarSeq& vars);

struct TComponents {
  double R = 0.0;
  double V = 0.0;
  std::optional<double> M;
  double T = 0.0;
};
TComponents T_index(const CorrSeq& corr, const VarSeq& vars, const MeanSeq* means,
                    const sdp::SolverConfig& cfg = {});

}  // namespace mcar
