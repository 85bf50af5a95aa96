#include "mcar/serialize.hpp"

#include <cctype>
#include <cmath>
#include <numbers>

#include "mcar/error.hpp"

namespace mcar::io {

namespace {

json num(double v) {
  if (!std::isfinite(v)) return nullptr;
  return v;
}

}  // namespace

json to_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(num(m(i, j)));
    a.push_back(std::move(row));
  }
  return a;
}

json to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(num(v(i)));
  return a;
}

json to_json(const PatternSet& ps) {
  json a = json::array();
  const auto& keep = ps.retained_columns();
  for (const auto& s : ps.patterns()) {
    json p = json::array();
    for (int j : s) p.push_back(keep.empty() ? j + 1 : keep[j] + 1);
    a.push_back(std::move(p));
  }
  return a;
}

json to_json(const MatrixSeq& seq) {
  json a = json::array();
  for (const auto& b : seq.blocks()) a.push_back(to_json(b));
  return a;
}

json to_json(const VecSeq& seq) {
  json a = json::array();
  for (const auto& v : seq.values()) a.push_back(to_json(v));
  return a;
}

json to_json(const SolveDiagnostics& d) {
  return json{{"status", d.status},
              {"iterations", d.iterations},
              {"primal_objective", num(d.primal_objective)},
              {"dual_objective", num(d.dual_objective)},
              {"gap", num(d.gap)},
              {"primal_infeasibility", num(d.primal_infeasibility)},
              {"dual_infeasibility", num(d.dual_infeasibility)},
              {"facially_reduced", d.facially_reduced},
              {"null_directions", d.null_directions},
              {"retries", d.retries},
              {"inaccurate", d.inaccurate},
              {"projection_distance", num(d.projection_distance)},
              {"input_asymmetry", num(d.input_asymmetry)},
              {"message", d.message}};
}

json to_json(const IncompatibilityReport& r) {
  json j{{"R", num(r.R)},
         {"lambda_star", num(r.lambda_star)},
         {"maximal", r.maximal},
         {"scale", num(r.scale)},
         {"Q", to_json(r.Q)},
         {"residual", r.residual ? to_json(*r.residual) : json(nullptr)},
         {"certificate", to_json(r.certificate)},
         {"primal_witness", r.primal_witness ? to_json(*r.primal_witness) : json(nullptr)},
         {"solver", to_json(r.solver)}};
  return j;
}

json to_json(const std::vector<DroppedPattern>& dropped) {
  json a = json::array();
  for (const auto& d : dropped) {
    json cols = json::array();
    for (int c : d.columns) cols.push_back(c + 1);
    a.push_back(json{{"columns", cols}, {"count", d.count}, {"reason", d.reason}});
  }
  return a;
}

json to_json(const TestResult& t) {
  json comp = json::object();
  comp["R"] = t.R ? num(*t.R) : json(nullptr);
  comp["V"] = t.V ? num(*t.V) : json(nullptr);
  comp["M"] = t.M ? num(*t.M) : json(nullptr);
  json consts = json::object();
  for (const auto& [k, v] : t.constants) consts[k] = num(v);
  json j{{"test", t.test},
         {"statistic", num(t.statistic)},
         {t.is_pvalue ? "p_value" : "threshold", num(t.threshold_or_pvalue)},
         {"reject", t.reject},
         {"alpha", t.alpha},
         {"components", comp},
         {"meta",
          json{{"seed", t.seed},
               {"B", t.B},
               {"constants", consts},
               {"patterns", t.ps ? to_json(*t.ps) : json::array()},
               {"counts", t.counts},
               {"dropped_patterns", to_json(t.dropped)},
               {"failed_replicates", t.failed_replicates},
               {"retried_replicates", t.retried_replicates},
               {"clamp_events", t.clamp_events},
               {"warnings", t.warnings}}}};
  if (t.solver) j["solver"] = to_json(*t.solver);
  return j;
}

json to_json(const EMResult& e) {
  return json{{"mu_hat", to_json(e.mu)},
              {"lambda_hat", to_json(e.lambda)},
              {"iterations", e.iterations},
              {"converged", e.converged},
              {"final_loglik", e.loglik.empty() ? json(nullptr) : num(e.loglik.back())}};
}

json to_json(const LittleResult& l) {
  return json{{"test", "little"},
              {"d2", num(l.d2)},
              {"d2_cov", num(l.d2_cov)},
              {"d2_aug", num(l.d2_aug)},
              {"f", l.f},
              {"f_prime", l.f_prime},
              {"f_mean", l.f_mean},
              {"p_mean", num(l.p_mean)},
              {"p_aug", num(l.p_aug)},
              {"p_cov", num(l.p_cov)},
              {"alpha", l.alpha},
              {"reject_aug", l.reject_aug},
              {"reject_cov", l.reject_cov},
              {"counts", l.counts},
              {"warnings", l.warnings},
              {"em", to_json(l.em)}};
}

json to_json(const sdp::SolverConfig& c) {
  return json{{"rel_gap_tol", c.rel_gap_tol},
              {"feas_tol", c.feas_tol},
              {"max_iter", c.max_iter},
              {"equilibrate", c.equilibrate},
              {"hash", c.hash()}};
}

json to_json(const OracleConfig& c) {
  return json{{"alpha", c.alpha}, {"nu", c.nu}, {"c_floor", c.c_floor}, {"C0", c.C0}, {"C1", c.C1},
              {"C2", c.C2},       {"C3", c.C3}, {"K", c.K},             {"sigma_min_sq", c.sigma_min_sq}};
}

json to_json(const BootstrapConfig& c) {
  return json{{"B", c.B},
              {"alpha", c.alpha},
              {"seed", c.seed},
              {"include_means", c.include_means},
              {"include_variances", c.include_variances},
              {"parallel", c.parallel},
              {"threads", c.threads},
              {"min_count", c.min_count}};
}

json to_json(const sim::GeneratorSpec& g) {
  json j{{"family", sim::to_string(g.family)}, {"n", g.n}, {"seed", g.seed}};
  if (g.is_cycle()) j["thetas"] = g.thetas;
  if (g.family == sim::Family::gaussian_full) j["cov"] = to_json(g.cov);
  if (g.family == sim::Family::clayton) {
    j["d"] = g.d;
    j["clayton_theta"] = g.clayton_theta;
    j["margin"] = g.margin;
    if (g.margin == "lognormal") {
      j["meanlog"] = g.meanlog;
      j["sdlog"] = g.sdlog;
    } else {
      j["margin_df"] = g.margin_df;
    }
  }
  return j;
}

json to_json(const sim::DeletionSpec& d) {
  json miss = json::array(), ctrl = json::array();
  for (int c : d.cols_missing) miss.push_back(c + 1);
  for (int c : d.cols_ctrl) ctrl.push_back(c + 1);
  return json{{"mechanism", sim::to_string(d.mechanism)},
              {"p", d.p},
              {"x", d.x},
              {"cols_missing", miss},
              {"cols_ctrl", ctrl}};
}

json to_json(const sim::PowerCurveSpec& s) {
  json j{{"label", s.name},
         {"generator", to_json(s.generator)},
         {"deletion", s.deletion ? to_json(*s.deletion) : json(nullptr)},
         {"grid_param", s.grid_param},
         {"grid", s.grid},
         {"M", s.M},
         {"test", sim::to_string(s.test)},
         {"seed", s.seed}};
  if (s.test == sim::TestKind::bootstrap) j["bootstrap"] = to_json(s.bootstrap);
  if (s.test == sim::TestKind::oracle) j["oracle"] = to_json(s.oracle);
  j["alpha"] = s.test == sim::TestKind::oracle ? s.oracle.alpha : s.bootstrap.alpha;
  return j;
}

json to_json(const sim::PowerPoint& p) {
  return json{{"grid_value", p.grid_value}, {"rejection_rate", p.rejection_rate}, {"stderr", p.stderr_},
              {"M", p.M},                   {"B", p.B},                           {"seed", p.seed},
              {"failures", p.failures}};
}

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InputError(std::string("config field '") + key + "': " + e.what());
  }
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw InputError(where + ": expected an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || it.key() == a;
    if (!ok) throw InputError(where + ": unknown field '" + it.key() + "'");
  }
}

}  // namespace

void apply(const json& j, sdp::SolverConfig& c) {
  check_keys(j, {"rel_gap_tol", "feas_tol", "max_iter", "equilibrate", "hash"}, "solver");
  take(j, "rel_gap_tol", c.rel_gap_tol);
  take(j, "feas_tol", c.feas_tol);
  take(j, "max_iter", c.max_iter);
  take(j, "equilibrate", c.equilibrate);
  c.validate();
}

void apply(const json& j, OracleConfig& c) {
  check_keys(j, {"alpha", "nu", "c_floor", "C0", "C1", "C2", "C3", "K", "sigma_min_sq"}, "oracle");
  take(j, "alpha", c.alpha);
  take(j, "nu", c.nu);
  take(j, "c_floor", c.c_floor);
  take(j, "C0", c.C0);
  take(j, "C1", c.C1);
  take(j, "C2", c.C2);
  take(j, "C3", c.C3);
  take(j, "K", c.K);
  take(j, "sigma_min_sq", c.sigma_min_sq);
  c.validate();
}

void apply(const json& j, BootstrapConfig& c) {
  check_keys(j, {"B", "alpha", "seed", "include_means", "include_variances", "parallel", "threads", "min_count"},
             "bootstrap");
  take(j, "B", c.B);
  take(j, "alpha", c.alpha);
  take(j, "seed", c.seed);
  take(j, "include_means", c.include_means);
  take(j, "include_variances", c.include_variances);
  take(j, "parallel", c.parallel);
  take(j, "threads", c.threads);
  take(j, "min_count", c.min_count);
  c.validate();
}

double parse_angle(const std::string& raw) {
  std::string s;
  for (char ch : raw)
    if (!std::isspace(static_cast<unsigned char>(ch))) s += ch;
  if (s.empty()) throw InputError("empty angle");
  auto bad = [&]() { return InputError("cannot parse angle '" + raw + "'"); };
  auto pos = s.find("pi");
  if (pos == std::string::npos) {
    std::size_t used = 0;
    double v;
    try {
      v = std::stod(s, &used);
    } catch (...) {
      throw bad();
    }
    if (used != s.size()) throw bad();
    return v;
  }
  std::string head = s.substr(0, pos), tail = s.substr(pos + 2);
  if (!head.empty() && head.back() == '*') head.pop_back();
  double coef = 1.0;
  if (head == "-") {
    coef = -1.0;
  } else if (!head.empty() && head != "+") {
    std::size_t used = 0;
    try {
      coef = std::stod(head, &used);
    } catch (...) {
      throw bad();
    }
    if (used != head.size()) throw bad();
  }
  double div = 1.0;
  if (!tail.empty()) {
    if (tail[0] != '/') throw bad();
    std::size_t used = 0;
    try {
      div = std::stod(tail.substr(1), &used);
    } catch (...) {
      throw bad();
    }
    if (used != tail.size() - 1 || div == 0) throw bad();
  }
  return coef * std::numbers::pi / div;
}

double angle_from_json(const json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return parse_angle(j.get<std::string>());
  throw InputError("angle must be a number or a string such as \"pi/3\"");
}

namespace {

std::vector<int> columns_from_json(const json& j, const char* what) {
  std::vector<int> out;
  if (!j.is_array()) throw InputError(std::string(what) + ": expected an array of 1-based columns");
  for (const auto& v : j) {
    if (!v.is_number_integer() || v.get<int>() < 1) throw InputError(std::string(what) + ": columns are 1-based");
    out.push_back(v.get<int>() - 1);
  }
  return out;
}

sim::GeneratorSpec generator_from_json(const json& j) {
  check_keys(j, {"family", "thetas", "cov", "d", "clayton_theta", "margin", "meanlog", "sdlog", "margin_df", "n", "seed"},
             "generator");
  sim::GeneratorSpec g;
  if (!j.contains("family")) throw InputError("generator: family required");
  g.family = sim::family_from_string(j.at("family").get<std::string>());
  if (j.contains("thetas"))
    for (const auto& t : j.at("thetas")) g.thetas.push_back(angle_from_json(t));
  if (j.contains("cov")) {
    const auto& c = j.at("cov");
    const int d = static_cast<int>(c.size());
    g.cov.resize(d, d);
    for (int a = 0; a < d; ++a) {
      if (static_cast<int>(c[a].size()) != d) throw InputError("generator: cov must be square");
      for (int b = 0; b < d; ++b) g.cov(a, b) = c[a][b].get<double>();
    }
  }
  take(j, "d", g.d);
  take(j, "clayton_theta", g.clayton_theta);
  take(j, "margin", g.margin);
  take(j, "meanlog", g.meanlog);
  take(j, "sdlog", g.sdlog);
  take(j, "margin_df", g.margin_df);
  take(j, "n", g.n);
  take(j, "seed", g.seed);
  return g;
}

sim::DeletionSpec deletion_from_json(const json& j) {
  check_keys(j, {"mechanism", "p", "x", "cols_missing", "cols_ctrl"}, "deletion");
  sim::DeletionSpec d;
  if (!j.contains("mechanism")) throw InputError("deletion: mechanism required");
  d.mechanism = sim::mechanism_from_string(j.at("mechanism").get<std::string>());
  take(j, "p", d.p);
  take(j, "x", d.x);
  if (j.contains("cols_missing")) d.cols_missing = columns_from_json(j.at("cols_missing"), "cols_missing");
  if (j.contains("cols_ctrl")) d.cols_ctrl = columns_from_json(j.at("cols_ctrl"), "cols_ctrl");
  return d;
}

}  // namespace

Preset preset_from_json(const json& j) {
  check_keys(j, {"name", "description", "reconstruction", "seed", "curves"}, "preset");
  Preset p;
  take(j, "name", p.name);
  take(j, "description", p.description);
  take(j, "reconstruction", p.reconstruction);
  std::uint64_t seed = 1;
  take(j, "seed", seed);
  if (!j.contains("curves") || !j.at("curves").is_array() || j.at("curves").empty())
    throw InputError("preset: nonempty 'curves' array required");
  for (const auto& c : j.at("curves")) {
    check_keys(c,
               {"label", "generator", "deletion", "grid_param", "grid", "M", "test", "bootstrap", "oracle", "solver",
                "alpha", "seed"},
               "curve");
    sim::PowerCurveSpec s;
    s.seed = seed;
    take(c, "label", s.name);
    if (!c.contains("generator")) throw InputError("curve: generator required");
    s.generator = generator_from_json(c.at("generator"));
    if (c.contains("deletion") && !c.at("deletion").is_null()) s.deletion = deletion_from_json(c.at("deletion"));
    take(c, "grid_param", s.grid_param);
    if (!c.contains("grid")) throw InputError("curve: grid required");
    for (const auto& g : c.at("grid")) s.grid.push_back(angle_from_json(g));
    take(c, "M", s.M);
    if (c.contains("test")) s.test = sim::test_from_string(c.at("test").get<std::string>());
    if (c.contains("bootstrap")) apply(c.at("bootstrap"), s.bootstrap);
    if (c.contains("oracle")) apply(c.at("oracle"), s.oracle);
    if (c.contains("solver")) apply(c.at("solver"), s.solver);
    if (c.contains("alpha")) {
      double a = c.at("alpha").get<double>();
      s.bootstrap.alpha = a;
      s.oracle.alpha = a;
    }
    take(c, "seed", s.seed);
    s.validate();
    p.labels.push_back(s.name);
    p.curves.push_back(std::move(s));
  }
  return p;
}

json preset_to_json(const Preset& p) {
  json curves = json::array();
  for (const auto& c : p.curves) curves.push_back(to_json(c));
  return json{{"name", p.name}, {"description", p.description}, {"reconstruction", p.reconstruction},
              {"curves", curves}};
}

}  // namespace mcar::io
