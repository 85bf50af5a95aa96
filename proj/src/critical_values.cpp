#include <algorithm>
#include <cmath>
#include <cstdio>

#include "mcar/error.hpp"
#include "mcar/hypothesis.hpp"

namespace mcar {

void OracleConfig::validate() const {
  if (!(alpha > 0 && alpha < 1)) throw InputError("alpha must lie in (0,1)");
  for (double v : {nu, c_floor, C0, C1, C2, C3, K, sigma_min_sq})
    if (!(v > 0) || !std::isfinite(v)) throw InputError("oracle constants must be positive");
}

namespace {

void check_counts(const PatternSet& ps, const std::vector<int>& counts) {
  if (counts.size() != ps.size()) throw InputError("counts: one per pattern required");
  for (int n : counts)
    if (n <= 0) throw InputError("counts must be positive");
}

}  // namespace

double critical_value_V(const OracleConfig& cfg, const PatternSet& ps, const std::vector<int>& counts) {
  cfg.validate();
  check_counts(ps, counts);
  double total = 0;
  for (int j = 0; j < ps.dim(); ++j) total += static_cast<double>(ps.containing(j).size());
  int nmin = *std::min_element(counts.begin(), counts.end());
  return cfg.C0 * cfg.nu * cfg.nu * std::sqrt(std::log(total / cfg.alpha) / nmin);
}

CriticalValue critical_value_R(const OracleConfig& cfg, const PatternSet& ps, const std::vector<int>& counts,
                               double inverse_scale) {
  cfg.validate();
  check_counts(ps, counts);
  if (!(inverse_scale >= 0)) throw InputError("inverse_scale must be nonnegative");
  const double nu2 = cfg.nu * cfg.nu;
  const double s2 = cfg.sigma_min_sq;
  const double m = static_cast<double>(ps.size());
  double best = 0;
  std::size_t max_s = 0;
  for (std::size_t s = 0; s < ps.size(); ++s) {
    const double sz = static_cast<double>(ps[s].size());
    const double n = counts[s];
    max_s = std::max(max_s, ps[s].size());
    double a = sz + std::log(m / cfg.alpha);
    double g = std::max(std::sqrt(a / n), a / n);
    double t1 = cfg.C1 * (nu2 / s2) * g;
    double t2 = cfg.C2 * (nu2 * nu2 / (s2 * s2)) * std::sqrt(sz * std::log(sz * m / cfg.alpha) / n);
    double t3 = cfg.C3 * (nu2 * nu2 / (s2 * s2)) * g * std::sqrt(sz * std::log(sz / cfg.alpha) / n);
    best = std::max(best, t1 + t2 + t3);
  }
  CriticalValue out;
  out.value = inverse_scale * best;
  int nmin = *std::min_element(counts.begin(), counts.end());
  double lhs = s2 * s2 * nmin;
  double rhs = cfg.K * nu2 * nu2 * std::log(static_cast<double>(max_s) / cfg.alpha);
  if (lhs < rhs) {
    out.precondition_ok = false;
    char buf[160];
    std::snprintf(buf, sizeof buf, "sample-size condition unmet: sigma_min^4 n = %.4g < K nu^4 log(max|S|/alpha) = %.4g",
                  lhs, rhs);
    out.warning = buf;
  }
  return out;
}

TestResult oracle_test(const MomentSummary& summary, const OracleConfig& cfg, const sdp::SolverConfig& scfg) {
  cfg.validate();
  const auto& ps = *summary.ps;
  auto rep = R_index(summary.correlations, scfg);
  double v = V_index(summary.variances);
  double cv = critical_value_V(cfg, ps, summary.counts);
  auto cr = critical_value_R(cfg, ps, summary.counts, 1.0 / cfg.c_floor);

  TestResult t;
  t.test = "oracle";
  t.R = rep.R;
  t.V = v;
  t.statistic = rep.R + v;
  t.threshold_or_pvalue = std::max(cr.value, cv);
  t.reject = t.statistic >= t.threshold_or_pvalue;
  t.alpha = cfg.alpha;
  t.ps = summary.ps;
  t.counts = summary.counts;
  t.dropped = summary.dropped;
  t.constants = {{"C0", cfg.C0}, {"C1", cfg.C1}, {"C2", cfg.C2}, {"C3", cfg.C3}, {"K", cfg.K},
                 {"nu", cfg.nu}, {"c_floor", cfg.c_floor}, {"sigma_min_sq", cfg.sigma_min_sq},
                 {"critical_R", cr.value}, {"critical_V", cv}};
  if (!cr.precondition_ok) t.warnings.push_back(cr.warning);
  t.solver = rep.solver;
  return t;
}

}  // namespace mcar
