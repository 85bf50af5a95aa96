// mcar: incompatibility indices and MCAR tests for data with missing values.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mcar/analytic.hpp"
#include "mcar/error.hpp"
#include "mcar/hypothesis.hpp"
#include "mcar/serialize.hpp"
#include "mcar/simulate.hpp"

#ifndef MCAR_PRESET_DIR
#define MCAR_PRESET_DIR "presets"
#endif

using namespace mcar;
using io::json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Common {
  std::string na = ",NA,NaN,nan";
  double gap_tol = 1e-8;
  double feas_tol = 1e-8;
  int max_iter = 200;
  bool no_equilibrate = false;
  std::string out;
  int threads = 0;
  int verbose = 0;

  sdp::SolverConfig solver() const {
    sdp::SolverConfig c;
    c.rel_gap_tol = gap_tol;
    c.feas_tol = feas_tol;
    c.max_iter = max_iter;
    c.equilibrate = !no_equilibrate;
    c.validate();
    return c;
  }

  std::set<std::string> na_tokens() const {
    std::set<std::string> t;
    std::stringstream ss(na);
    std::string tok;
    while (std::getline(ss, tok, ',')) t.insert(tok);
    if (!na.empty() && na.back() == ',') t.insert("");
    if (na.empty() || na.front() == ',') t.insert("");
    return t;
  }

  json echo() const {
    return json{{"na", na},
                {"solver", io::to_json(solver())},
                {"threads", threads}};
  }
};

void add_common(CLI::App* c, Common& o) {
  c->add_option("--na", o.na, "Comma-separated NA tokens (a leading comma includes the empty field)")
      ->capture_default_str();
  c->add_option("--gap-tol", o.gap_tol, "Relative duality-gap tolerance")->capture_default_str();
  c->add_option("--feas-tol", o.feas_tol, "Feasibility tolerance")->capture_default_str();
  c->add_option("--max-iter", o.max_iter, "Interior-point iteration cap")->capture_default_str();
  c->add_flag("--no-equilibrate", o.no_equilibrate, "Disable constraint row scaling");
  c->add_option("--out,-o", o.out, "Write the JSON report here instead of stdout");
  c->add_option("--threads", o.threads, "OpenMP threads (0: runtime default)")->capture_default_str();
  c->add_flag("--verbose,-v", o.verbose, "Progress messages on stderr");
}

void emit(const json& j, const std::string& path) {
  std::string text = j.dump(2) + "\n";
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw InputError("cannot write " + path);
  f << text;
}

json envelope(const std::string& cmd, json config) {
  return json{{"tool", "mcar"}, {"version", kVersion}, {"command", cmd}, {"config", std::move(config)}};
}

json input_json(const std::string& path, const Dataset& ds) {
  return json{{"path", path},
              {"rows", ds.rows()},
              {"cols", ds.cols()},
              {"names", ds.names()},
              {"missing_fraction", ds.missing_fraction()}};
}

json pattern_table(const GroupedSamples& g, const Dataset& ds) {
  json a = json::array();
  const auto& keep = g.ps->retained_columns();
  for (std::size_t s = 0; s < g.ps->size(); ++s) {
    json cols = json::array(), names = json::array();
    for (int j : (*g.ps)[s]) {
      cols.push_back(keep[j] + 1);
      names.push_back(ds.names()[keep[j]]);
    }
    a.push_back(json{{"columns", cols}, {"names", names}, {"count", g.data[s].rows()}});
  }
  return a;
}

// ---- index -------------------------------------------------------------

struct IndexOpts {
  Common c;
  std::string csv;
  int min_count = 2;
  bool ridge = false;
  bool unbiased = false;
  bool rtilde = false;
};

int cmd_index(const IndexOpts& o) {
  Dataset ds = read_csv_file(o.csv, o.c.na_tokens());
  auto g = split_by_pattern(ds, o.min_count);
  MomentConfig mc;
  mc.ridge = o.ridge;
  mc.unbiased = o.unbiased;
  auto m = sample_moments(g, mc);
  auto scfg = o.c.solver();
  auto rep = R_index(m.correlations, scfg);
  auto vd = V_decomposition(m.variances);
  double M = M_index(m.means);

  json cfg = o.c.echo();
  cfg["min_count"] = o.min_count;
  cfg["ridge"] = o.ridge;
  cfg["unbiased"] = o.unbiased;
  cfg["rtilde"] = o.rtilde;
  json out = envelope("index", cfg);
  out["input"] = input_json(o.csv, ds);
  out["patterns"] = pattern_table(g, ds);
  out["dropped_patterns"] = io::to_json(g.dropped);
  out["empty_rows"] = g.empty_rows;
  json r = io::to_json(rep);
  out["R"] = r;
  out["V"] = json{{"V", vd.V}, {"residual", vd.residual ? io::to_json(*vd.residual) : json(nullptr)}};
  out["M"] = M;
  out["T"] = rep.R + vd.V + M;
  out["variance_scales"] = io::to_json(m.scales);
  out["ridge_patterns"] = m.ridge_patterns;
  if (o.rtilde) {
    auto rt = Rtilde_index(m.covariances, scfg);
    out["Rtilde"] = io::to_json(rt);
  }
  emit(out, o.c.out);
  return 0;
}

// ---- test --------------------------------------------------------------

struct TestOpts {
  Common c;
  std::string csv;
  double alpha = 0.05;
  int B = 99;
  std::uint64_t seed = 1;
  bool no_means = false;
  bool no_variances = false;
  int min_count = 10;
  bool serial = false;
  bool little = false;
  bool oracle = false;
  bool split = false;
  double split_fraction = 0.5;
  double nu = 1.0, c_floor = 0.5, C0 = 16, C1 = 64, C2 = 40, C3 = 40, K = 1024, sigma_min_sq = 1.0;
};

int cmd_test(const TestOpts& o) {
  Dataset ds = read_csv_file(o.csv, o.c.na_tokens());
  auto scfg = o.c.solver();
  BootstrapConfig b;
  b.B = o.B;
  b.alpha = o.alpha;
  b.seed = o.seed;
  b.include_means = !o.no_means;
  b.include_variances = !o.no_variances;
  b.parallel = !o.serial;
  b.threads = o.c.threads;
  b.min_count = o.min_count;
  b.validate();
  OracleConfig oc{o.alpha, o.nu, o.c_floor, o.C0, o.C1, o.C2, o.C3, o.K, o.sigma_min_sq};
  oc.validate();

  auto g = split_by_pattern(ds, o.min_count);
  if (o.c.verbose) std::fprintf(stderr, "bootstrap: %zu patterns, B = %d\n", g.ps->size(), b.B);
  auto res = bootstrap_omnibus(g, b, scfg);

  json cfg = o.c.echo();
  cfg["bootstrap"] = io::to_json(b);
  cfg["little"] = o.little;
  cfg["oracle"] = o.oracle ? io::to_json(oc) : json(false);
  cfg["split"] = o.split ? json{{"fraction", o.split_fraction}} : json(false);
  json out = envelope("test", cfg);
  out["input"] = input_json(o.csv, ds);
  out["patterns"] = pattern_table(g, ds);
  out["bootstrap"] = io::to_json(res);

  auto inapplicable = [](const std::string& why) { return json{{"applicable", false}, {"reason", why}}; };
  if (o.little) {
    auto gl = split_by_pattern(ds, 1);
    if (!pair_coverage(*gl.ps)) {
      out["little"] = inapplicable("some pair of variables is never observed together");
    } else {
      try {
        out["little"] = io::to_json(little_test(gl, o.alpha));
        out["little"]["applicable"] = true;
      } catch (const std::exception& e) {
        out["little"] = inapplicable(e.what());
      }
    }
  }
  if (o.oracle) {
    try {
      out["oracle"] = io::to_json(oracle_test(sample_moments(g), oc, scfg));
    } catch (const std::exception& e) {
      out["oracle"] = inapplicable(e.what());
    }
  }
  if (o.split) {
    SplitConfig sc;
    sc.fraction = o.split_fraction;
    sc.seed = o.seed;
    try {
      out["split"] = io::to_json(split_test(g, sc, oc, scfg));
    } catch (const std::exception& e) {
      out["split"] = inapplicable(e.what());
    }
  }
  emit(out, o.c.out);
  return 0;
}

// ---- simulate ----------------------------------------------------------

struct SimOpts {
  Common c;
  std::string preset;
  std::string csv;
  int M = -1;
  int B = -1;
  std::int64_t seed = -1;
  bool serial = false;
  std::vector<std::string> curves;
  bool list = false;
};

std::string preset_path(const std::string& name) {
  namespace fs = std::filesystem;
  if (fs::exists(name)) return name;
  fs::path p = fs::path(MCAR_PRESET_DIR) / (name + ".json");
  if (fs::exists(p)) return p.string();
  throw InputError("unknown preset '" + name + "' (looked in " MCAR_PRESET_DIR ")");
}

int cmd_simulate(const SimOpts& o) {
  namespace fs = std::filesystem;
  if (o.list) {
    std::vector<std::string> names;
    if (fs::is_directory(MCAR_PRESET_DIR))
      for (const auto& e : fs::directory_iterator(MCAR_PRESET_DIR))
        if (e.path().extension() == ".json") names.push_back(e.path().stem().string());
    std::sort(names.begin(), names.end());
    for (const auto& n : names) std::cout << n << "\n";
    return 0;
  }
  if (o.preset.empty()) throw InputError("simulate: --preset (name or JSON file) required");
  std::ifstream f(preset_path(o.preset));
  json pj;
  try {
    pj = json::parse(f);
  } catch (const json::exception& e) {
    throw InputError(std::string("preset: ") + e.what());
  }
  auto preset = io::preset_from_json(pj);
  auto scfg = o.c.solver();

  json curves = json::array();
  std::ostringstream csv;
  csv << "grid_value,rejection_rate,stderr,M,B,seed,failures,curve,test\n";
  for (auto& spec : preset.curves) {
    if (!o.curves.empty() && std::find(o.curves.begin(), o.curves.end(), spec.name) == o.curves.end()) continue;
    if (o.M > 0) spec.M = o.M;
    if (o.B > 0) spec.bootstrap.B = o.B;
    if (o.seed >= 0) spec.seed = static_cast<std::uint64_t>(o.seed);
    spec.parallel = !o.serial;
    spec.threads = o.c.threads;
    spec.solver = scfg;
    spec.validate();
    if (o.c.verbose) std::fprintf(stderr, "curve %s: %zu points, M = %d\n", spec.name.c_str(), spec.grid.size(), spec.M);
    auto pts = sim::power_curve(spec);
    json pj2 = json::array();
    char buf[320];
    for (const auto& p : pts) {
      pj2.push_back(io::to_json(p));
      std::snprintf(buf, sizeof buf, "%.10g,%.10g,%.10g,%d,%d,%llu,%d,%s,%s\n", p.grid_value, p.rejection_rate,
                    p.stderr_, p.M, p.B, static_cast<unsigned long long>(p.seed), p.failures, spec.name.c_str(),
                    sim::to_string(spec.test).c_str());
      csv << buf;
    }
    json cj = io::to_json(spec);
    cj["points"] = pj2;
    curves.push_back(cj);
  }
  if (curves.empty()) throw InputError("simulate: no curve matched --curve");

  json cfg = o.c.echo();
  cfg["preset"] = o.preset;
  cfg["M"] = o.M > 0 ? json(o.M) : json(nullptr);
  cfg["B"] = o.B > 0 ? json(o.B) : json(nullptr);
  cfg["seed"] = o.seed >= 0 ? json(o.seed) : json(nullptr);
  cfg["serial"] = o.serial;
  json out = envelope("simulate", cfg);
  out["preset"] = json{{"name", preset.name}, {"description", preset.description},
                       {"reconstruction", preset.reconstruction}};
  out["curves"] = curves;

  if (!o.csv.empty() && o.csv != "-") {
    std::ofstream cf(o.csv);
    if (!cf) throw InputError("cannot write " + o.csv);
    cf << csv.str();
  }
  if (!o.c.out.empty()) emit(out, o.c.out);
  if (o.csv == "-" || (o.csv.empty() && o.c.out.empty())) std::cout << csv.str();
  if (!o.csv.empty() && o.csv != "-" && o.c.out.empty()) emit(out, "");
  return 0;
}

// ---- analyze-cycle -----------------------------------------------------

struct CycleOpts {
  Common c;
  std::string angles;
  std::string rho;
  double cfloor = 0.1;
};

std::vector<double> split_list(const std::string& s, bool angles) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (angles) {
      v.push_back(io::parse_angle(tok));
    } else {
      try {
        v.push_back(std::stod(tok));
      } catch (...) {
        throw InputError("cannot parse correlation '" + tok + "'");
      }
    }
  }
  return v;
}

json k_json(const std::vector<int>& K) {
  json a = json::array();
  for (int k : K) a.push_back(k + 1);
  return a;
}

int cmd_analyze_cycle(const CycleOpts& o) {
  analytic::CycleSpec c;
  if (!o.angles.empty() == !o.rho.empty()) throw InputError("analyze-cycle: give exactly one of --angles, --rho");
  if (!o.angles.empty()) {
    c.thetas = split_list(o.angles, true);
  } else {
    c = analytic::CycleSpec::from_rho(split_list(o.rho, false));
  }
  c.validate();
  auto scfg = o.c.solver();

  json cfg = o.c.echo();
  cfg["cfloor"] = o.cfloor;
  json out = envelope("analyze-cycle", cfg);
  out["d"] = c.d();
  out["thetas"] = c.thetas;
  out["rho"] = c.rho();

  auto top = analytic::barrett_max_violation(c);
  json barrett{{"feasible", analytic::barrett_feasible(c)},
               {"max_violation", json{{"K", k_json(top.K)}, {"violation", top.violation}}}};
  if (c.d() <= 20) {
    json viol = json::array();
    for (const auto& t : analytic::barrett_violations(c))
      viol.push_back(json{{"K", k_json(t.K)}, {"violation", t.violation}});
    barrett["violated"] = viol;
  } else {
    barrett["violated"] = nullptr;
  }
  out["barrett"] = barrett;

  auto sr = analytic::reduce_signs(c);
  out["sign_reduction"] = json{{"flips", sr.flips}, {"thetas", sr.reduced.thetas}};
  out["collapsed_thetas"] = analytic::collapse_singular_edges(c).thetas;

  auto kkt = analytic::cycle_R_detail(c);
  out["R_kkt"] = json{{"R", kkt.R}, {"method", kkt.method}, {"iterations", kkt.iterations},
                      {"residual", kkt.residual}, {"phi1", kkt.phi1}};
  auto rep = R_index(cycle_corr(c.rho()), scfg);
  out["R_sdp"] = json{{"R", rep.R}, {"solver", io::to_json(rep.solver)}};
  out["agreement"] = std::abs(kkt.R - rep.R);
  try {
    auto lb = analytic::cycle_R_lower_bound(c, o.cfloor);
    out["lower_bound"] = json{{"bound", lb.bound}, {"c_prime", lb.c_prime}, {"violation", lb.violation}};
  } catch (const InputError& e) {
    out["lower_bound"] = json{{"bound", nullptr}, {"reason", e.what()}};
  }
  emit(out, o.c.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mcar: incompatibility indices and MCAR tests for data with missing values"};
  app.set_config("--config", "", "TOML/INI file with option defaults (flags take precedence)");
  app.require_subcommand(0, 1);
  bool version = false;
  app.add_flag("--version", version, "Print version and solver configuration hash");

  IndexOpts io_;
  auto* idx = app.add_subcommand("index", "Compute R, V, M and T from a CSV with missing values");
  idx->add_option("csv", io_.csv, "Input CSV with a header row")->required();
  add_common(idx, io_.c);
  idx->add_option("--min-count", io_.min_count, "Drop patterns with fewer rows")->capture_default_str();
  idx->add_flag("--ridge", io_.ridge, "Ridge singular pattern covariances instead of failing");
  idx->add_flag("--unbiased", io_.unbiased, "Use the n-1 denominator");
  idx->add_flag("--rtilde", io_.rtilde, "Also compute the trace-normalized index on covariances");

  TestOpts to;
  auto* tst = app.add_subcommand("test", "Bootstrap MCAR test, optionally with Little, oracle and split tests");
  tst->add_option("csv", to.csv, "Input CSV with a header row")->required();
  add_common(tst, to.c);
  tst->add_option("--alpha", to.alpha)->capture_default_str();
  tst->add_option("--B", to.B, "Bootstrap replicates")->capture_default_str();
  tst->add_option("--seed", to.seed)->capture_default_str();
  tst->add_flag("--no-means", to.no_means, "Leave M out of the statistic");
  tst->add_flag("--no-variances", to.no_variances, "Leave V out of the statistic");
  tst->add_option("--min-count", to.min_count, "Drop patterns with fewer rows")->capture_default_str();
  tst->add_flag("--serial", to.serial, "Run replicates on one thread");
  tst->add_flag("--little", to.little, "Append Little's test");
  tst->add_flag("--oracle", to.oracle, "Append the oracle threshold test");
  tst->add_flag("--split", to.split, "Append the sample-splitting test");
  tst->add_option("--split-fraction", to.split_fraction)->capture_default_str();
  tst->add_option("--nu", to.nu)->capture_default_str();
  tst->add_option("--c-floor", to.c_floor)->capture_default_str();
  tst->add_option("--C0", to.C0)->capture_default_str();
  tst->add_option("--C1", to.C1)->capture_default_str();
  tst->add_option("--C2", to.C2)->capture_default_str();
  tst->add_option("--C3", to.C3)->capture_default_str();
  tst->add_option("--K", to.K)->capture_default_str();
  tst->add_option("--sigma-min-sq", to.sigma_min_sq)->capture_default_str();

  SimOpts so;
  auto* simc = app.add_subcommand("simulate", "Monte-Carlo power curves from a preset");
  add_common(simc, so.c);
  simc->add_option("--preset,-p", so.preset, "Preset name or JSON file");
  simc->add_option("--csv", so.csv, "Write the power table CSV here ('-' for stdout)");
  simc->add_option("--M", so.M, "Override repetitions per grid point");
  simc->add_option("--B", so.B, "Override bootstrap replicates");
  simc->add_option("--seed", so.seed, "Override the preset seed");
  simc->add_option("--curve", so.curves, "Run only the named curve(s)");
  simc->add_flag("--serial", so.serial, "Run repetitions on one thread");
  simc->add_flag("--list", so.list, "List shipped presets");

  CycleOpts co;
  auto* cyc = app.add_subcommand("analyze-cycle", "Analytic and SDP analysis of a cycle of correlations");
  add_common(cyc, co.c);
  cyc->add_option("--angles", co.angles, "Comma-separated angles, e.g. pi/3,pi/3,pi/3");
  cyc->add_option("--rho", co.rho, "Comma-separated correlations");
  cyc->add_option("--cfloor", co.cfloor, "Floor on 1 - rho^2 for the lower bound")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (version) {
      std::cout << "mcar " << kVersion << " solver-config " << sdp::SolverConfig{}.hash() << "\n";
      return 0;
    }
    if (*idx) return cmd_index(io_);
    if (*tst) return cmd_test(to);
    if (*simc) return cmd_simulate(so);
    if (*cyc) return cmd_analyze_cycle(co);
    std::cout << app.help();
    return 0;
  } catch (const InputError& e) {
    std::fprintf(stderr, "mcar: input error: %s\n", e.what());
    return 2;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "mcar: numerical failure: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "mcar: error: %s\n", e.what());
    return 2;
  }
}
