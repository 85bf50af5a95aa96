#include "mcar/estimation.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "mcar/error.hpp"
#include "mcar/linalg.hpp"

namespace mcar {

Dataset::Dataset(int n_rows, int d, std::vector<double> values, std::vector<std::string> names)
    : n_(n_rows), d_(d), values_(std::move(values)), names_(std::move(names)) {
  if (n_ < 0 || d_ < 1) throw InputError("dataset: bad shape");
  if (values_.size() != static_cast<std::size_t>(n_) * d_) throw InputError("dataset: not rectangular");
  if (names_.empty())
    for (int j = 0; j < d_; ++j) names_.push_back("X" + std::to_string(j + 1));
  if (static_cast<int>(names_.size()) != d_) throw InputError("dataset: header width mismatch");
  for (double v : values_)
    if (std::isinf(v)) throw InputError("dataset: infinite value");
}

Dataset Dataset::from_matrix(const Matrix& m) {
  std::vector<double> v(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v[i * m.cols() + j] = m(i, j);
  return Dataset(static_cast<int>(m.rows()), static_cast<int>(m.cols()), std::move(v));
}

Dataset Dataset::with_missing(const std::vector<char>& mask) const {
  if (mask.size() != values_.size()) throw InputError("mask size mismatch");
  auto v = values_;
  for (std::size_t k = 0; k < v.size(); ++k)
    if (mask[k]) v[k] = std::numeric_limits<double>::quiet_NaN();
  return Dataset(n_, d_, std::move(v), names_);
}

double Dataset::missing_fraction() const {
  if (values_.empty()) return 0.0;
  std::size_t k = 0;
  for (double v : values_) k += std::isnan(v);
  return static_cast<double>(k) / values_.size();
}

const std::set<std::string>& default_na_tokens() {
  static const std::set<std::string> t{"", "NA", "NaN", "nan"};
  return t;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (char ch : line) {
    if (ch == '"') {
      quoted = !quoted;
    } else if (ch == ',' && !quoted) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  for (auto& s : out) {
    auto b = s.find_first_not_of(" \t");
    auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

}  // namespace

Dataset read_csv(std::istream& in, const std::set<std::string>& na) {
  std::string line;
  if (!std::getline(in, line)) throw InputError("csv: empty input");
  auto names = split_line(line);
  const int d = static_cast<int>(names.size());
  std::vector<double> vals;
  int n = 0;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto cells = split_line(line);
    if (static_cast<int>(cells.size()) != d)
      throw InputError("csv: line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                       " fields, expected " + std::to_string(d));
    for (const auto& c : cells) {
      if (na.count(c)) {
        vals.push_back(std::numeric_limits<double>::quiet_NaN());
        continue;
      }
      double v = 0;
      auto [p, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
      if (ec != std::errc() || p != c.data() + c.size() || !std::isfinite(v))
        throw InputError("csv: line " + std::to_string(lineno) + ": cannot parse '" + c + "'");
      vals.push_back(v);
    }
    ++n;
  }
  return Dataset(n, d, std::move(vals), std::move(names));
}

Dataset read_csv_file(const std::string& path, const std::set<std::string>& na) {
  std::ifstream f(path);
  if (!f) throw InputError("cannot open " + path);
  return read_csv(f, na);
}

void write_csv(std::ostream& out, const Dataset& ds) {
  for (int j = 0; j < ds.cols(); ++j) out << (j ? "," : "") << ds.names()[j];
  out << '\n';
  char buf[32];
  for (int i = 0; i < ds.rows(); ++i) {
    for (int j = 0; j < ds.cols(); ++j) {
      if (j) out << ',';
      if (ds.observed(i, j)) {
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, ds.value(i, j));
        out.write(buf, p - buf);
      } else {
        out << "NA";
      }
    }
    out << '\n';
  }
}

std::vector<int> GroupedSamples::counts() const {
  std::vector<int> c;
  for (const auto& m : data) c.push_back(static_cast<int>(m.rows()));
  return c;
}

int GroupedSamples::total() const {
  int t = 0;
  for (const auto& m : data) t += static_cast<int>(m.rows());
  return t;
}

GroupedSamples split_by_pattern(const Dataset& ds, int min_count) {
  std::map<std::vector<int>, std::vector<int>> groups;
  GroupedSamples g;
  g.source_cols = ds.cols();
  for (int i = 0; i < ds.rows(); ++i) {
    std::vector<int> cols;
    for (int j = 0; j < ds.cols(); ++j)
      if (ds.observed(i, j)) cols.push_back(j);
    if (cols.empty()) {
      ++g.empty_rows;
      continue;
    }
    groups[cols].push_back(i);
  }
  std::vector<std::vector<int>> kept;
  std::vector<std::vector<int>> kept_rows;
  for (auto& [cols, rows] : groups) {
    if (static_cast<int>(rows.size()) < min_count) {
      g.dropped.push_back({cols, static_cast<int>(rows.size()),
                           "fewer than " + std::to_string(min_count) + " rows"});
      continue;
    }
    kept.push_back(cols);
    kept_rows.push_back(rows);
  }
  if (kept.empty()) throw InputError("no missingness pattern has at least " + std::to_string(min_count) + " rows");
  g.ps = std::make_shared<const PatternSet>(ds.cols(), kept);
  for (std::size_t s = 0; s < kept.size(); ++s) {
    Matrix m(kept_rows[s].size(), kept[s].size());
    for (std::size_t r = 0; r < kept_rows[s].size(); ++r)
      for (std::size_t a = 0; a < kept[s].size(); ++a) m(r, a) = ds.value(kept_rows[s][r], kept[s][a]);
    g.data.push_back(std::move(m));
  }
  g.rows = std::move(kept_rows);
  return g;
}

GroupedSamples group_from_blocks(std::shared_ptr<const PatternSet> ps, std::vector<Matrix> data) {
  if (data.size() != ps->size()) throw InputError("grouped data: block count mismatch");
  GroupedSamples g;
  g.source_cols = ps->dim();
  g.ps = std::move(ps);
  for (std::size_t s = 0; s < data.size(); ++s)
    if (data[s].cols() != static_cast<Eigen::Index>((*g.ps)[s].size()))
      throw InputError("grouped data: width mismatch");
  g.data = std::move(data);
  return g;
}

PatternMoments pattern_moments(const Matrix& x, bool unbiased) {
  const double n = static_cast<double>(x.rows());
  PatternMoments m;
  m.mean = x.colwise().mean().transpose();
  Matrix c = x.rowwise() - m.mean.transpose();
  m.cov = (c.transpose() * c) / (unbiased ? n - 1.0 : n);
  m.cov = linalg::symmetrize(m.cov);
  return m;
}

MomentSummary sample_moments(const GroupedSamples& g, const MomentConfig& cfg) {
  const auto& ps = *g.ps;
  MomentSummary out;
  out.ps = g.ps;
  out.dropped = g.dropped;
  std::vector<Vector> means, vars;
  std::vector<Matrix> covs, corrs;
  for (std::size_t s = 0; s < ps.size(); ++s) {
    const Matrix& x = g.data[s];
    if (x.rows() < 2) throw InputError("pattern " + std::to_string(s + 1) + " has fewer than 2 rows");
    auto pm = pattern_moments(x, cfg.unbiased);
    double mean_var = pm.cov.diagonal().mean();
    bool degenerate = false;
    for (Eigen::Index a = 0; a < pm.cov.rows(); ++a)
      if (!(pm.cov(a, a) > 1e-14 * (1.0 + pm.mean(a) * pm.mean(a))))
        degenerate = true;
    if (degenerate) {
      if (!cfg.ridge) {
        int col = 0;
        for (Eigen::Index a = 0; a < pm.cov.rows(); ++a)
          if (!(pm.cov(a, a) > 1e-14 * (1.0 + pm.mean(a) * pm.mean(a)))) col = static_cast<int>(a);
        throw InputError("pattern " + std::to_string(s + 1) + " has a constant column " +
                         std::to_string(ps.retained_columns()[ps[s][col]] + 1));
      }
    }
    if (cfg.ridge && (degenerate || linalg::min_eigenvalue(pm.cov) <= 1e-10 * mean_var)) {
      double lam = cfg.ridge_lambda >= 0 ? cfg.ridge_lambda : 1e-8 * (mean_var > 0 ? mean_var : 1.0);
      pm.cov += lam * Matrix::Identity(pm.cov.rows(), pm.cov.cols());
      out.ridge_patterns.push_back(static_cast<int>(s));
    }
    out.counts.push_back(static_cast<int>(x.rows()));
    means.push_back(pm.mean);
    vars.push_back(pm.cov.diagonal());
    corrs.push_back(linalg::cov_to_corr(pm.cov));
    covs.push_back(pm.cov);
  }
  out.raw_means = MeanSeq(g.ps, means);
  out.raw_variances = VarSeq(g.ps, vars);
  auto nv = normalize_variances(out.raw_variances);
  out.scales = nv.scales;
  out.variances = nv.normalized;
  for (std::size_t s = 0; s < ps.size(); ++s) {
    Vector inv(ps[s].size());
    for (std::size_t a = 0; a < ps[s].size(); ++a) inv(a) = 1.0 / std::sqrt(out.scales(ps[s][a]));
    means[s] = means[s].cwiseProduct(inv);
    covs[s] = inv.asDiagonal() * covs[s] * inv.asDiagonal();
  }
  out.means = MeanSeq(g.ps, means);
  out.covariances = MatrixSeq(g.ps, covs);
  out.correlations = CorrSeq(g.ps, corrs);
  return out;
}

}  // namespace mcar
