#include <cmath>
#include <limits>
#include <random>

#include <omp.h>

#include "mcar/error.hpp"
#include "mcar/hypothesis.hpp"
#include "mcar/linalg.hpp"
#include "mcar/rng.hpp"

namespace mcar {

void BootstrapConfig::validate() const {
  if (B < 19) throw InputError("bootstrap: B must be at least 19");
  if (!(alpha > 0 && alpha < 1)) throw InputError("bootstrap: alpha must lie in (0,1)");
  if (threads < 0) throw InputError("bootstrap: threads must be nonnegative");
  if (min_count < 2) throw InputError("bootstrap: min_count must be at least 2");
}

namespace {

std::vector<PatternMoments> all_moments(const std::vector<Matrix>& data) {
  std::vector<PatternMoments> m;
  for (const auto& x : data) {
    auto pm = pattern_moments(x, false);
    for (Eigen::Index a = 0; a < pm.cov.rows(); ++a)
      if (!(pm.cov(a, a) > 0)) throw NumericalError("constant column in a pattern sample");
    m.push_back(std::move(pm));
  }
  return m;
}

Vector average_variances(const PatternSet& ps, const std::vector<PatternMoments>& m) {
  Vector av = Vector::Zero(ps.dim());
  for (std::size_t s = 0; s < ps.size(); ++s)
    for (std::size_t a = 0; a < ps[s].size(); ++a) av(ps[s][a]) += m[s].cov(a, a);
  for (int j = 0; j < ps.dim(); ++j) av(j) /= static_cast<double>(ps.containing(j).size());
  return av;
}

}  // namespace

BootstrapStatistic omnibus_statistic(const std::shared_ptr<const PatternSet>& ps, const std::vector<Matrix>& data,
                                     bool include_means, bool include_variances, const sdp::SolverConfig& scfg,
                                     IncompatibilityReport* report) {
  auto m = all_moments(data);
  std::vector<Matrix> corr;
  for (const auto& pm : m) corr.push_back(linalg::cov_to_corr(pm.cov));
  auto rep = R_index(CorrSeq(ps, std::move(corr)), scfg);
  BootstrapStatistic st;
  st.R = rep.R;
  st.T = rep.R;
  if (include_means || include_variances) {
    std::vector<Vector> vars, means;
    for (const auto& pm : m) {
      vars.push_back(pm.cov.diagonal());
      means.push_back(pm.mean);
    }
    auto nv = normalize_variances(VarSeq(ps, vars));
    if (include_variances) {
      st.V = V_index(nv.normalized);
      st.T += *st.V;
    }
    if (include_means) {
      for (std::size_t s = 0; s < ps->size(); ++s)
        for (std::size_t a = 0; a < (*ps)[s].size(); ++a) means[s](a) /= std::sqrt(nv.scales((*ps)[s][a]));
      st.M = M_index(MeanSeq(ps, means));
      st.T += *st.M;
    }
  }
  if (report) *report = std::move(rep);
  return st;
}

NullTransform null_transform(const std::shared_ptr<const PatternSet>& ps, const std::vector<Matrix>& data,
                             const IncompatibilityReport& report, bool include_means, bool include_variances) {
  const auto& P = *ps;
  auto m = all_moments(data);
  NullTransform out;
  const bool full = include_means || include_variances;
  Vector av = average_variances(P, m);
  // Pattern means in normalized units, averaged per coordinate.
  Vector mu_bar = Vector::Zero(P.dim());
  if (full) {
    for (std::size_t s = 0; s < P.size(); ++s)
      for (std::size_t a = 0; a < P[s].size(); ++a) mu_bar(P[s][a]) += m[s].mean(a) / std::sqrt(av(P[s][a]));
    for (int j = 0; j < P.dim(); ++j) mu_bar(j) /= static_cast<double>(P.containing(j).size());
  }
  for (std::size_t s = 0; s < P.size(); ++s) {
    const auto& pat = P[s];
    const int k = static_cast<int>(pat.size());
    Vector unit(k);
    if (full) {
      for (int a = 0; a < k; ++a) unit(a) = 1.0 / std::sqrt(av(pat[a]));
    } else {
      for (int a = 0; a < k; ++a) unit(a) = 1.0 / std::sqrt(m[s].cov(a, a));
    }
    Matrix centred = (data[s].rowwise() - m[s].mean.transpose()) * unit.asDiagonal();
    Matrix spread = unit.asDiagonal() * m[s].cov * unit.asDiagonal();
    auto inv = linalg::psd_inv_sqrt(spread);
    auto root = linalg::psd_sqrt(report.Q[s]);
    out.clamp_events += inv.clamped + root.clamped;
    Matrix x = centred * inv.value * root.value;
    if (full) {
      Vector target(k);
      for (int a = 0; a < k; ++a) target(a) = mu_bar(pat[a]);
      x.rowwise() += target.transpose();
    }
    out.data.push_back(std::move(x));
  }
  return out;
}

namespace {

struct OneReplicate {
  double stat;
  bool retried;
  bool failed;
};

OneReplicate run_one(const std::shared_ptr<const PatternSet>& ps, const std::vector<Matrix>& xt,
                     const BootstrapConfig& cfg, const sdp::SolverConfig& scfg, int b) {
  std::vector<Matrix> sample;
  sample.reserve(xt.size());
  for (std::size_t s = 0; s < xt.size(); ++s) {
    const Matrix& x = xt[s];
    auto rng = substream(cfg.seed, StreamTag::bootstrap, s, static_cast<std::uint64_t>(b));
    std::uniform_int_distribution<Eigen::Index> pick(0, x.rows() - 1);
    Matrix r(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) r.row(i) = x.row(pick(rng));
    sample.push_back(std::move(r));
  }
  try {
    return {omnibus_statistic(ps, sample, cfg.include_means, cfg.include_variances, scfg).T, false, false};
  } catch (const std::exception&) {
  }
  sdp::SolverConfig retry = scfg;
  retry.equilibrate = true;
  retry.max_iter = 4 * scfg.max_iter;
  try {
    return {omnibus_statistic(ps, sample, cfg.include_means, cfg.include_variances, retry).T, true, false};
  } catch (const std::exception&) {
  }
  return {std::numeric_limits<double>::infinity(), true, true};
}

}  // namespace

ReplicateOutcome bootstrap_replicates_serial(const std::shared_ptr<const PatternSet>& ps,
                                             const std::vector<Matrix>& transformed, const BootstrapConfig& cfg,
                                             const sdp::SolverConfig& scfg) {
  ReplicateOutcome out;
  out.stats.resize(cfg.B);
  for (int b = 0; b < cfg.B; ++b) {
    auto r = run_one(ps, transformed, cfg, scfg, b);
    out.stats[b] = r.stat;
    out.retried += r.retried;
    out.failed += r.failed;
  }
  return out;
}

ReplicateOutcome bootstrap_replicates_parallel(const std::shared_ptr<const PatternSet>& ps,
                                               const std::vector<Matrix>& transformed, const BootstrapConfig& cfg,
                                               const sdp::SolverConfig& scfg) {
  ReplicateOutcome out;
  out.stats.resize(cfg.B);
  int retried = 0, failed = 0;
  const int nt = cfg.threads > 0 ? cfg.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic) num_threads(nt) reduction(+ : retried, failed)
  for (int b = 0; b < cfg.B; ++b) {
    auto r = run_one(ps, transformed, cfg, scfg, b);
    out.stats[b] = r.stat;
    retried += r.retried;
    failed += r.failed;
  }
  out.retried = retried;
  out.failed = failed;
  return out;
}

double bootstrap_pvalue(double t0, const std::vector<double>& stats) {
  std::size_t k = 0;
  for (double t : stats) k += t >= t0;
  return (1.0 + static_cast<double>(k)) / (1.0 + static_cast<double>(stats.size()));
}

TestResult bootstrap_omnibus(const GroupedSamples& g, const BootstrapConfig& cfg, const sdp::SolverConfig& scfg) {
  cfg.validate();
  const auto counts = g.counts();
  for (std::size_t s = 0; s < counts.size(); ++s)
    if (counts[s] < cfg.min_count)
      throw InputError("bootstrap: pattern " + std::to_string(s + 1) + " has " + std::to_string(counts[s]) +
                       " rows, fewer than " + std::to_string(cfg.min_count));
  IncompatibilityReport rep;
  auto t0 = omnibus_statistic(g.ps, g.data, cfg.include_means, cfg.include_variances, scfg, &rep);
  auto xt = null_transform(g.ps, g.data, rep, cfg.include_means, cfg.include_variances);
  auto reps = cfg.parallel ? bootstrap_replicates_parallel(g.ps, xt.data, cfg, scfg)
                           : bootstrap_replicates_serial(g.ps, xt.data, cfg, scfg);

  TestResult t;
  t.test = "bootstrap";
  t.statistic = t0.T;
  t.R = t0.R;
  t.V = t0.V;
  t.M = t0.M;
  t.is_pvalue = true;
  t.threshold_or_pvalue = bootstrap_pvalue(t0.T, reps.stats);
  t.alpha = cfg.alpha;
  t.reject = t.threshold_or_pvalue <= cfg.alpha;
  t.ps = g.ps;
  t.counts = counts;
  t.dropped = g.dropped;
  t.seed = cfg.seed;
  t.B = cfg.B;
  t.constants = {{"include_means", cfg.include_means ? 1.0 : 0.0},
                 {"include_variances", cfg.include_variances ? 1.0 : 0.0}};
  t.failed_replicates = reps.failed;
  t.retried_replicates = reps.retried;
  t.clamp_events = xt.clamp_events;
  if (reps.failed > 0)
    t.warnings.push_back(std::to_string(reps.failed) + " replicate(s) failed and were counted as +inf");
  t.replicates = std::move(reps.stats);
  t.solver = rep.solver;
  return t;
}

TestResult bootstrap_omnibus(const Dataset& ds, const BootstrapConfig& cfg, const sdp::SolverConfig& scfg) {
  return bootstrap_omnibus(split_by_pattern(ds, cfg.min_count), cfg, scfg);
}

}  // namespace mcar
