#pragma once

#include <string>
#include <vector>

#include "mcar/patterns.hpp"

namespace mcar::sdp {

// One coefficient of a constraint or of the cost: <E, X> picks up
// value * X[block](row, col), where E = value (e_r e_c' + e_c e_r') / 2.
struct Entry {
  int block;
  int row;
  int col;
  double value;
};

struct Constraint {
  std::vector<Entry> entries;
  double rhs = 0.0;
};

// maximize <C, X>  s.t.  <A_k, X> = b_k,  X = blockdiag(X_1..X_p) PSD.
// Dual: minimize b'y  s.t.  sum_k y_k A_k - C = Z PSD.
struct ConicProblem {
  std::vector<int> block_dims;
  std::vector<Entry> objective;
  std::vector<Constraint> constraints;

  std::size_t num_constraints() const { return constraints.size(); }
  // Throws InputError if any entry is out of range for its block.
  void validate() const;
};

enum class SolveStatus { optimal, max_iter, numerical_failure };
std::string to_string(SolveStatus s);

struct SolverConfig {
  double rel_gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 200;
  bool equilibrate = true;

  void validate() const;
  // Stable hash of the settings, printed by the CLI.
  std::string hash() const;
};

struct ConicSolution {
  std::vector<Matrix> primal_blocks;      // X
  std::vector<Matrix> dual_slack_blocks;  // Z
  Vector dual_multipliers;                // y
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  SolveStatus status = SolveStatus::numerical_failure;
  std::string message;
};

ConicSolution solve(const ConicProblem& p, const SolverConfig& cfg = {});

// Variables (Sigma, Z_S for each S); optimal value v gives R = 1 - v/d.
ConicProblem build_R_dual(const CorrSeq& corr);

// Variables (Y_S for each S, W = A*Y + Y - I); the diagonal Y is eliminated.
// Stated as a maximization of -<Sigma_S, Y_S>, so R = 1 + v/d.
ConicProblem build_R_primal(const CorrSeq& corr);

// Trace-normalized variant without the equal-diagonal constraint.
// Requires bar_trace(cov) = d within 1e-6.
ConicProblem build_Rtilde_dual(const MatrixSeq& cov);

// Facially reduced form of the R / R-tilde duals for inputs with singular
// blocks. Every null vector u of an input block S forces Sigma u = 0 and
// Z_S u = 0, so Sigma = V S V' and Z_S = U_S T_S U_S' with V, U_S orthonormal
// bases of the complements; the reduced program is strictly feasible in the
// common single-level case.
struct ReducedProblem {
  ConicProblem problem;
  Matrix sigma_basis;               // V, d x r
  std::vector<Matrix> slack_bases;  // U_S, |S| x r_S
  bool sigma_forced_zero = false;   // equal diagonal plus a null coordinate
  int null_directions = 0;
};

// True when some block has an eigenvalue <= null_tol (1 + max|entry|).
bool has_singular_block(const MatrixSeq& seq, double null_tol = 1e-9);

ReducedProblem build_reduced(const MatrixSeq& seq, bool equal_diagonal, double null_tol = 1e-9);

}  // namespace mcar::sdp
