#include "mcar/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>
#include <numeric>
#include <ostream>
#include <random>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <omp.h>

#include "mcar/error.hpp"
#include "mcar/linalg.hpp"
#include "mcar/rng.hpp"

namespace mcar::sim {

std::string to_string(Family f) {
  switch (f) {
    case Family::gaussian_cycle: return "gaussian_cycle";
    case Family::lognormal_cycle: return "lognormal_cycle";
    case Family::gaussian_full: return "gaussian_full";
    case Family::clayton: return "clayton";
  }
  return "?";
}

Family family_from_string(const std::string& s) {
  for (Family f : {Family::gaussian_cycle, Family::lognormal_cycle, Family::gaussian_full, Family::clayton})
    if (to_string(f) == s) return f;
  throw InputError("unknown generator family '" + s + "'");
}

std::string to_string(Mechanism m) {
  switch (m) {
    case Mechanism::mcar: return "mcar";
    case Mechanism::mar_1_to_x: return "mar_1_to_x";
    case Mechanism::mar_rank: return "mar_rank";
  }
  return "?";
}

Mechanism mechanism_from_string(const std::string& s) {
  for (Mechanism m : {Mechanism::mcar, Mechanism::mar_1_to_x, Mechanism::mar_rank})
    if (to_string(m) == s) return m;
  throw InputError("unknown deletion mechanism '" + s + "'");
}

std::string to_string(TestKind t) {
  switch (t) {
    case TestKind::bootstrap: return "bootstrap";
    case TestKind::little_aug: return "little_aug";
    case TestKind::little_cov: return "little_cov";
    case TestKind::oracle: return "oracle";
  }
  return "?";
}

TestKind test_from_string(const std::string& s) {
  for (TestKind t : {TestKind::bootstrap, TestKind::little_aug, TestKind::little_cov, TestKind::oracle})
    if (to_string(t) == s) return t;
  throw InputError("unknown test '" + s + "'");
}

void GeneratorSpec::validate() const {
  if (n < 2) throw InputError("generator: n must be at least 2");
  switch (family) {
    case Family::gaussian_cycle:
    case Family::lognormal_cycle:
      if (thetas.size() < 3) throw InputError("generator: a cycle needs at least 3 angles");
      for (double t : thetas)
        if (!(t >= 0 && t <= std::numbers::pi)) throw InputError("generator: angles must lie in [0, pi]");
      break;
    case Family::gaussian_full:
      if (cov.rows() < 1 || cov.rows() != cov.cols()) throw InputError("generator: covariance must be square");
      if (!linalg::is_psd(cov)) throw InputError("generator: covariance is not PSD");
      break;
    case Family::clayton:
      if (d < 2) throw InputError("generator: clayton needs d >= 2");
      if (!(clayton_theta > 0)) throw InputError("generator: clayton parameter must be positive");
      if (margin != "lognormal" && margin != "chisq") throw InputError("generator: unknown margin '" + margin + "'");
      if (!(sdlog > 0)) throw InputError("generator: sdlog must be positive");
      if (!(margin_df > 0)) throw InputError("generator: margin_df must be positive");
      break;
  }
}

GroupedSamples generate_cycle(const GeneratorSpec& spec) {
  spec.validate();
  if (!spec.is_cycle()) throw InputError("generate_cycle: not a cycle family");
  const int d = static_cast<int>(spec.thetas.size());
  auto ps = std::make_shared<const PatternSet>(PatternSet::cycle(d));
  std::vector<Matrix> data;
  std::normal_distribution<double> N(0.0, 1.0);
  for (int j = 0; j < d; ++j) {
    auto rng = substream(spec.seed, StreamTag::generate, static_cast<std::uint64_t>(j));
    const double r = std::cos(spec.thetas[j]);
    const double c = std::sqrt(std::max(0.0, 1.0 - r * r));
    Matrix x(spec.n, 2);
    for (int i = 0; i < spec.n; ++i) {
      double a = N(rng), b = N(rng);
      x(i, 0) = a;
      x(i, 1) = r * a + c * b;
    }
    if (spec.family == Family::lognormal_cycle) x = x.array().exp().matrix();
    data.push_back(std::move(x));
  }
  return group_from_blocks(ps, std::move(data));
}

Dataset generate_full(const GeneratorSpec& spec) {
  spec.validate();
  std::normal_distribution<double> N(0.0, 1.0);
  auto rng = substream(spec.seed, StreamTag::generate, 0);
  if (spec.family == Family::gaussian_full) {
    const int d = static_cast<int>(spec.cov.rows());
    Matrix root = linalg::psd_sqrt(spec.cov).value;
    Matrix z(spec.n, d);
    for (int i = 0; i < spec.n; ++i)
      for (int j = 0; j < d; ++j) z(i, j) = N(rng);
    return Dataset::from_matrix(z * root);
  }
  if (spec.family == Family::clayton) {
    // Gamma frailty: V ~ Gamma(1/theta, 1), U_j = (1 - log(W_j)/V)^(-1/theta)
    // with W_j uniform, then margins by inverse CDF.
    const int d = spec.d;
    const double th = spec.clayton_theta;
    std::gamma_distribution<double> G(1.0 / th, 1.0);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    boost::math::normal_distribution<double> phi(spec.meanlog, spec.sdlog);
    boost::math::chi_squared_distribution<double> chi(spec.margin_df);
    const bool lognormal = spec.margin == "lognormal";
    Matrix x(spec.n, d);
    for (int i = 0; i < spec.n; ++i) {
      double v = G(rng);
      while (!(v > 0)) v = G(rng);
      for (int j = 0; j < d; ++j) {
        double w = U(rng);
        while (!(w > 0)) w = U(rng);
        double u = std::pow(1.0 - std::log(w) / v, -1.0 / th);
        u = std::clamp(u, 1e-300, 1.0 - 1e-16);
        x(i, j) = lognormal ? std::exp(boost::math::quantile(phi, u)) : boost::math::quantile(chi, u);
      }
    }
    return Dataset::from_matrix(x);
  }
  throw InputError("generate_full: cycle families produce per-pattern samples");
}

void DeletionSpec::validate(int d) const {
  if (!(p > 0 && p < 1)) throw InputError("deletion: p must lie in (0,1)");
  if (!(x > 0)) throw InputError("deletion: x must be positive");
  if (cols_missing.empty()) throw InputError("deletion: no columns to delete from");
  for (int c : cols_missing)
    if (c < 0 || c >= d) throw InputError("deletion: column out of range");
  if (mechanism != Mechanism::mcar) {
    if (cols_ctrl.size() != cols_missing.size())
      throw InputError("deletion: one control column per missing column required");
    for (int c : cols_ctrl) {
      if (c < 0 || c >= d) throw InputError("deletion: control column out of range");
      if (std::find(cols_missing.begin(), cols_missing.end(), c) != cols_missing.end())
        throw InputError("deletion: control and missing columns must be disjoint");
    }
  }
}

namespace {

std::vector<double> column(const Dataset& ds, int j) {
  std::vector<double> v(ds.rows());
  for (int i = 0; i < ds.rows(); ++i) {
    if (!ds.observed(i, j)) throw InputError("deletion: control column " + std::to_string(j + 1) + " has missing values");
    v[i] = ds.value(i, j);
  }
  return v;
}

}  // namespace

Dataset delete_mcar(const Dataset& ds, double p, const std::vector<int>& cols, std::uint64_t seed) {
  if (!(p >= 0 && p < 1)) throw InputError("delete_mcar: p must lie in [0,1)");
  std::vector<char> mask(static_cast<std::size_t>(ds.rows()) * ds.cols(), 0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int j : cols) {
    if (j < 0 || j >= ds.cols()) throw InputError("delete_mcar: column out of range");
    auto rng = substream(seed, StreamTag::deletion, static_cast<std::uint64_t>(j));
    for (int i = 0; i < ds.rows(); ++i)
      if (U(rng) < p) mask[static_cast<std::size_t>(i) * ds.cols() + j] = 1;
  }
  return ds.with_missing(mask);
}

MarProbabilities mar_1_to_x_probabilities(double p, double x, int n_low, int n_high) {
  const double n = n_low + n_high;
  double lo = n * p / (n_low + x * n_high);
  double hi = x * lo;
  if (hi > 1.0 || lo > 1.0) {
    double pmax = std::min(1.0, (n_low + x * n_high) / (std::max(x, 1.0) * n));
    char buf[160];
    std::snprintf(buf, sizeof buf, "mar_1_to_x: p = %.4g infeasible for x = %.4g; maximal feasible p is %.6g", p, x,
                  pmax);
    throw InputError(buf);
  }
  return {lo, hi};
}

Dataset delete_mar_1_to_x(const Dataset& ds, double p, double x, const std::vector<int>& cols_missing,
                          const std::vector<int>& cols_ctrl, std::uint64_t seed) {
  DeletionSpec spec{Mechanism::mar_1_to_x, p, x, cols_missing, cols_ctrl, seed};
  spec.validate(ds.cols());
  std::vector<char> mask(static_cast<std::size_t>(ds.rows()) * ds.cols(), 0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (std::size_t k = 0; k < cols_missing.size(); ++k) {
    auto ctrl = column(ds, cols_ctrl[k]);
    auto sorted = ctrl;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    double med = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    int n_low = 0;
    for (double v : ctrl) n_low += v < med;
    int n_high = static_cast<int>(n) - n_low;
    auto pr = mar_1_to_x_probabilities(p, x, n_low, n_high);
    const int j = cols_missing[k];
    auto rng = substream(seed, StreamTag::deletion, static_cast<std::uint64_t>(j));
    for (int i = 0; i < ds.rows(); ++i) {
      double q = ctrl[i] < med ? pr.p_low : pr.p_high;
      if (U(rng) < q) mask[static_cast<std::size_t>(i) * ds.cols() + j] = 1;
    }
  }
  return ds.with_missing(mask);
}

std::vector<double> mid_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && v[idx[j + 1]] == v[idx[i]]) ++j;
    double mid = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = mid;
    i = j + 1;
  }
  return r;
}

std::vector<double> rank_probabilities(const std::vector<double>& ctrl, double p, bool* clamped) {
  const double n = static_cast<double>(ctrl.size());
  auto r = mid_ranks(ctrl);
  std::vector<double> q(r.size());
  const double target = p * n;
  std::vector<char> fixed(r.size(), 0);
  bool any = false;
  // Clamp at 1 and rescale the free entries until no entry exceeds 1.
  for (int pass = 0; pass < static_cast<int>(r.size()) + 1; ++pass) {
    double fixed_mass = 0, free_rank = 0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (fixed[i]) {
        fixed_mass += 1.0;
      } else {
        free_rank += r[i];
      }
    }
    bool changed = false;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (fixed[i]) {
        q[i] = 1.0;
        continue;
      }
      q[i] = (target - fixed_mass) * r[i] / free_rank;
      if (q[i] > 1.0) {
        fixed[i] = 1;
        changed = true;
        any = true;
      }
    }
    if (!changed) break;
  }
  if (clamped) *clamped = any;
  return q;
}

DeletionResult delete_mar_rank(const Dataset& ds, double p, const std::vector<int>& cols_missing,
                               const std::vector<int>& cols_ctrl, std::uint64_t seed) {
  DeletionSpec spec{Mechanism::mar_rank, p, 1.0, cols_missing, cols_ctrl, seed};
  spec.validate(ds.cols());
  DeletionResult out;
  std::vector<char> mask(static_cast<std::size_t>(ds.rows()) * ds.cols(), 0);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (std::size_t k = 0; k < cols_missing.size(); ++k) {
    bool clamped = false;
    auto q = rank_probabilities(column(ds, cols_ctrl[k]), p, &clamped);
    if (clamped)
      out.warnings.push_back("mar_rank: probabilities above 1 clamped for column " +
                             std::to_string(cols_missing[k] + 1) + "; remaining rows renormalized");
    const int j = cols_missing[k];
    auto rng = substream(seed, StreamTag::deletion, static_cast<std::uint64_t>(j));
    for (int i = 0; i < ds.rows(); ++i)
      if (U(rng) < q[i]) mask[static_cast<std::size_t>(i) * ds.cols() + j] = 1;
  }
  out.data = ds.with_missing(mask);
  return out;
}

DeletionResult apply_deletion(const Dataset& ds, const DeletionSpec& spec) {
  spec.validate(ds.cols());
  switch (spec.mechanism) {
    case Mechanism::mcar: return {delete_mcar(ds, spec.p, spec.cols_missing, spec.seed), {}};
    case Mechanism::mar_1_to_x:
      return {delete_mar_1_to_x(ds, spec.p, spec.x, spec.cols_missing, spec.cols_ctrl, spec.seed), {}};
    case Mechanism::mar_rank: return delete_mar_rank(ds, spec.p, spec.cols_missing, spec.cols_ctrl, spec.seed);
  }
  throw InputError("unknown mechanism");
}

namespace {

// Inversions of v; v is sorted on return.
long long merge_count(std::vector<double>& v, std::vector<double>& tmp, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  std::size_t mid = (lo + hi) / 2;
  long long c = merge_count(v, tmp, lo, mid) + merge_count(v, tmp, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      c += static_cast<long long>(mid - i);
      tmp[k++] = v[j++];
    } else {
      tmp[k++] = v[i++];
    }
  }
  while (i < mid) tmp[k++] = v[i++];
  while (j < hi) tmp[k++] = v[j++];
  std::copy(tmp.begin() + lo, tmp.begin() + hi, v.begin() + lo);
  return c;
}

}  // namespace

double kendall_tau(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size() || a.size() < 2) throw InputError("kendall_tau: need two equal-length samples");
  const std::size_t n = a.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return a[i] < a[j]; });
  std::vector<double> v(n), tmp(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = b[idx[i]];
  long long disc = merge_count(v, tmp, 0, n);
  double pairs = 0.5 * static_cast<double>(n) * (n - 1);
  return (pairs - 2.0 * static_cast<double>(disc)) / pairs;
}

void PowerCurveSpec::validate() const {
  generator.validate();
  if (M < 1) throw InputError("power curve: M must be at least 1");
  if (grid.empty()) throw InputError("power curve: empty grid");
  if (test == TestKind::bootstrap) bootstrap.validate();
  if (test == TestKind::oracle) oracle.validate();
  if (deletion) {
    if (generator.is_cycle()) throw InputError("power curve: cycle families are generated per pattern; no deletion");
    int d = generator.family == Family::gaussian_full ? static_cast<int>(generator.cov.rows()) : generator.d;
    deletion->validate(d);
  }
  if (!deletion && !generator.is_cycle())
    throw InputError("power curve: full-data families need a deletion mechanism");
}

void set_grid_value(const std::string& param, double value, GeneratorSpec& gen, std::optional<DeletionSpec>& del) {
  if (param.rfind("theta", 0) == 0 && param.size() > 5) {
    int k = std::stoi(param.substr(5));
    if (k < 1 || k > static_cast<int>(gen.thetas.size())) throw InputError("grid: " + param + " out of range");
    gen.thetas[k - 1] = value;
  } else if (param == "n") {
    gen.n = static_cast<int>(std::lround(value));
  } else if (param == "clayton_theta") {
    gen.clayton_theta = value;
  } else if (param == "p" || param == "x") {
    if (!del) throw InputError("grid: " + param + " needs a deletion mechanism");
    (param == "p" ? del->p : del->x) = value;
  } else {
    throw InputError("grid: unknown parameter '" + param + "'");
  }
}

bool run_repetition(const PowerCurveSpec& spec, std::size_t grid_index, int rep, bool* failed) {
  GeneratorSpec gen = spec.generator;
  std::optional<DeletionSpec> del = spec.deletion;
  set_grid_value(spec.grid_param, spec.grid[grid_index], gen, del);
  gen.seed = derive_seed(spec.seed, StreamTag::repetition, grid_index, 2 * static_cast<std::uint64_t>(rep));
  *failed = false;
  try {
    GroupedSamples g;
    if (gen.is_cycle()) {
      g = generate_cycle(gen);
    } else {
      Dataset full = generate_full(gen);
      del->seed = derive_seed(spec.seed, StreamTag::repetition, grid_index, 2 * static_cast<std::uint64_t>(rep) + 1);
      Dataset ds = apply_deletion(full, *del).data;
      int min_count = spec.test == TestKind::bootstrap ? spec.bootstrap.min_count : 1;
      if (spec.test == TestKind::oracle) min_count = 2;
      g = split_by_pattern(ds, min_count);
    }
    switch (spec.test) {
      case TestKind::bootstrap: {
        BootstrapConfig b = spec.bootstrap;
        b.parallel = false;
        b.seed = derive_seed(spec.seed, StreamTag::bootstrap, grid_index, static_cast<std::uint64_t>(rep));
        return bootstrap_omnibus(g, b, spec.solver).reject;
      }
      case TestKind::little_aug: return little_test(g, spec.bootstrap.alpha).reject_aug;
      case TestKind::little_cov: return little_test(g, spec.bootstrap.alpha).reject_cov;
      case TestKind::oracle: return oracle_test(sample_moments(g), spec.oracle, spec.solver).reject;
    }
  } catch (const std::exception&) {
    *failed = true;
  }
  return false;
}

std::vector<PowerPoint> power_curve(const PowerCurveSpec& spec) {
  spec.validate();
  std::vector<PowerPoint> out;
  const int nt = spec.threads > 0 ? spec.threads : omp_get_max_threads();
  for (std::size_t gi = 0; gi < spec.grid.size(); ++gi) {
    std::vector<char> dec(spec.M, 0), fail(spec.M, 0);
    if (spec.parallel) {
#pragma omp parallel for schedule(dynamic) num_threads(nt)
      for (int r = 0; r < spec.M; ++r) {
        bool f = false;
        dec[r] = run_repetition(spec, gi, r, &f);
        fail[r] = f;
      }
    } else {
      for (int r = 0; r < spec.M; ++r) {
        bool f = false;
        dec[r] = run_repetition(spec, gi, r, &f);
        fail[r] = f;
      }
    }
    PowerPoint pt;
    pt.grid_value = spec.grid[gi];
    pt.M = spec.M;
    pt.B = spec.test == TestKind::bootstrap ? spec.bootstrap.B : 0;
    pt.seed = spec.seed;
    int rej = 0;
    for (int r = 0; r < spec.M; ++r) {
      rej += dec[r];
      pt.failures += fail[r];
    }
    pt.rejection_rate = static_cast<double>(rej) / spec.M;
    pt.stderr_ = std::sqrt(pt.rejection_rate * (1.0 - pt.rejection_rate) / spec.M);
    out.push_back(pt);
  }
  return out;
}

void write_power_csv(std::ostream& out, const std::vector<PowerPoint>& pts) {
  out << "grid_value,rejection_rate,stderr,M,B,seed,failures\n";
  char buf[256];
  for (const auto& p : pts) {
    std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%d,%d,%llu,%d\n", p.grid_value, p.rejection_rate, p.stderr_,
                  p.M, p.B, static_cast<unsigned long long>(p.seed), p.failures);
    out << buf;
  }
}

}  // namespace mcar::sim
