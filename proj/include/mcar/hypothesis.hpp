#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcar/estimation.hpp"
#include "mcar/measures.hpp"
#include "mcar/sdp.hpp"

namespace mcar {

struct OracleConfig {
  double alpha = 0.05;
  double nu = 1.0;
  double c_floor = 0.5;
  double C0 = 16.0;
  double C1 = 64.0;
  double C2 = 40.0;
  double C3 = 40.0;
  double K = 1024.0;
  double sigma_min_sq = 1.0;

  void validate() const;
};

struct CriticalValue {
  double value = 0.0;
  bool precondition_ok = true;
  std::string warning;
};

double critical_value_V(const OracleConfig& cfg, const PatternSet& ps, const std::vector<int>& counts);
// inverse_scale is 1/c for the oracle test, ||X1||_* / d for the split test.
CriticalValue critical_value_R(const OracleConfig& cfg, const PatternSet& ps, const std::vector<int>& counts,
                               double inverse_scale);

struct TestResult {
  std::string test;
  double statistic = 0.0;
  double threshold_or_pvalue = 0.0;
  bool is_pvalue = false;
  bool reject = false;
  double alpha = 0.05;
  std::optional<double> R, V, M;

  std::shared_ptr<const PatternSet> ps;
  std::vector<int> counts;
  std::vector<DroppedPattern> dropped;
  std::uint64_t seed = 0;
  int B = 0;
  std::vector<std::pair<std::string, double>> constants;

  int failed_replicates = 0;
  int retried_replicates = 0;
  int clamp_events = 0;
  std::vector<std::string> warnings;
  std::vector<double> replicates;  // bootstrap statistics in replicate order
  std::optional<SolveDiagnostics> solver;
};

TestResult oracle_test(const MomentSummary& summary, const OracleConfig& cfg, const sdp::SolverConfig& scfg);

struct SplitConfig {
  double fraction = 0.5;
  std::uint64_t seed = 1;
  int min_count = 5;  // per half
};

// -(1/d) <X1, Sigma2>.
double split_statistic(const MatrixSeq& witness, const MatrixSeq& corr2);

TestResult split_test(const GroupedSamples& g, const SplitConfig& split, const OracleConfig& cfg,
                      const sdp::SolverConfig& scfg);
TestResult split_test(const Dataset& ds, const SplitConfig& split, const OracleConfig& cfg,
                      const sdp::SolverConfig& scfg);

struct BootstrapConfig {
  int B = 99;
  double alpha = 0.05;
  std::uint64_t seed = 1;
  bool include_means = true;
  bool include_variances = true;
  bool parallel = true;
  int threads = 0;  // 0: OpenMP default
  int min_count = 10;

  void validate() const;
};

struct BootstrapStatistic {
  double T = 0.0;
  double R = 0.0;
  std::optional<double> V, M;
};

// One evaluation of the omnibus statistic on grouped data: normalize
// variances, then R + V (+ M).
BootstrapStatistic omnibus_statistic(const std::shared_ptr<const PatternSet>& ps, const std::vector<Matrix>& data,
                                     bool include_means, bool include_variances, const sdp::SolverConfig& scfg,
                                     IncompatibilityReport* report = nullptr);

// Transformed data whose sample moments are null-conforming.
struct NullTransform {
  std::vector<Matrix> data;
  int clamp_events = 0;
};
NullTransform null_transform(const std::shared_ptr<const PatternSet>& ps, const std::vector<Matrix>& data,
                             const IncompatibilityReport& report, bool include_means, bool include_variances);

struct ReplicateOutcome {
  std::vector<double> stats;
  int failed = 0;
  int retried = 0;
};

ReplicateOutcome bootstrap_replicates_serial(const std::shared_ptr<const PatternSet>& ps,
                                             const std::vector<Matrix>& transformed, const BootstrapConfig& cfg,
                                             const sdp::SolverConfig& scfg);
ReplicateOutcome bootstrap_replicates_parallel(const std::shared_ptr<const PatternSet>& ps,
                                               const std::vector<Matrix>& transformed, const BootstrapConfig& cfg,
                                               const sdp::SolverConfig& scfg);

double bootstrap_pvalue(double t0, const std::vector<double>& stats);

TestResult bootstrap_omnibus(const GroupedSamples& g, const BootstrapConfig& cfg, const sdp::SolverConfig& scfg);
TestResult bootstrap_omnibus(const Dataset& ds, const BootstrapConfig& cfg, const sdp::SolverConfig& scfg);

struct EMConfig {
  int max_iter = 1000;
  double tol = 1e-10;  // on the relative log-likelihood increase
  bool require_convergence = true;
};

struct EMResult {
  Vector mu;
  Matrix lambda;
  int iterations = 0;
  bool converged = false;
  std::vector<double> loglik;
};

// Every pair of columns must be observed together in some pattern.
bool pair_coverage(const PatternSet& ps);

EMResult em_mle(const GroupedSamples& g, const EMConfig& cfg = {});
EMResult em_mle(const Dataset& ds, const EMConfig& cfg = {});
double observed_loglik(const GroupedSamples& g, const Vector& mu, const Matrix& lambda);

struct LittleResult {
  double d2 = 0.0;
  double d2_cov = 0.0;
  double d2_aug = 0.0;
  int f = 0;
  int f_prime = 0;
  int f_mean = 0;
  double p_mean = 1.0;
  double p_aug = 1.0;
  double p_cov = 1.0;
  double alpha = 0.05;
  bool reject_aug = false;
  bool reject_cov = false;
  EMResult em;
  std::vector<int> counts;
  std::vector<std::string> warnings;
};

int little_df_aug(const PatternSet& ps);
int little_df_cov(const PatternSet& ps);
double chi2_sf(double x, double df);

LittleResult little_test(const GroupedSamples& g, double alpha, const EMConfig& cfg = {});
LittleResult little_test(const Dataset& ds, double alpha, const EMConfig& cfg = {});

}  // namespace mcar
