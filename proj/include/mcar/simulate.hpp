#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mcar/estimation.hpp"
#include "mcar/hypothesis.hpp"

namespace mcar::sim {

enum class Family { gaussian_cycle, lognormal_cycle, gaussian_full, clayton };
std::string to_string(Family f);
Family family_from_string(const std::string& s);

struct GeneratorSpec {
  Family family = Family::gaussian_cycle;
  std::vector<double> thetas;  // cycle families
  Matrix cov;                  // gaussian_full
  int d = 3;                   // clayton
  double clayton_theta = 1.0;
  std::string margin = "lognormal";  // clayton margins: "lognormal" or "chisq"
  double meanlog = 0.0;
  double sdlog = 1.0;
  double margin_df = 1.0;
  int n = 200;  // rows, or rows per pattern for cycle families
  std::uint64_t seed = 1;

  bool is_cycle() const { return family == Family::gaussian_cycle || family == Family::lognormal_cycle; }
  void validate() const;
};

// Independent bivariate samples per cycle edge.
GroupedSamples generate_cycle(const GeneratorSpec& spec);
// Complete rows for the full-data families.
Dataset generate_full(const GeneratorSpec& spec);

enum class Mechanism { mcar, mar_1_to_x, mar_rank };
std::string to_string(Mechanism m);
Mechanism mechanism_from_string(const std::string& s);

struct DeletionSpec {
  Mechanism mechanism = Mechanism::mcar;
  double p = 0.1;
  double x = 1.0;
  std::vector<int> cols_missing;  // 0-based
  std::vector<int> cols_ctrl;     // paired with cols_missing
  std::uint64_t seed = 1;

  void validate(int d) const;
};

struct DeletionResult {
  Dataset data;
  std::vector<std::string> warnings;
};

Dataset delete_mcar(const Dataset& ds, double p, const std::vector<int>& cols, std::uint64_t seed);

struct MarProbabilities {
  double p_low;
  double p_high;
};
// Solves n_low p_low + n_high p_high = n p with p_high = x p_low.
MarProbabilities mar_1_to_x_probabilities(double p, double x, int n_low, int n_high);
Dataset delete_mar_1_to_x(const Dataset& ds, double p, double x, const std::vector<int>& cols_missing,
                          const std::vector<int>& cols_ctrl, std::uint64_t seed);

// Mid-ranks (1-based) with ties averaged.
std::vector<double> mid_ranks(const std::vector<double>& v);
// Per-row deletion probabilities proportional to rank, clamped at 1 with the
// remainder renormalized so the expected rate stays p.
std::vector<double> rank_probabilities(const std::vector<double>& ctrl, double p, bool* clamped = nullptr);
DeletionResult delete_mar_rank(const Dataset& ds, double p, const std::vector<int>& cols_missing,
                               const std::vector<int>& cols_ctrl, std::uint64_t seed);

DeletionResult apply_deletion(const Dataset& ds, const DeletionSpec& spec);

// Kendall's tau-a by merge-sort inversion counting.
double kendall_tau(const std::vector<double>& a, const std::vector<double>& b);

enum class TestKind { bootstrap, little_aug, little_cov, oracle };
std::string to_string(TestKind t);
TestKind test_from_string(const std::string& s);

struct PowerCurveSpec {
  std::string name;
  GeneratorSpec generator;
  std::optional<DeletionSpec> deletion;
  // Parameter varied along the grid: "theta1".."thetaK", "n", "p", "x",
  // "clayton_theta".
  std::string grid_param = "theta1";
  std::vector<double> grid;
  int M = 200;
  TestKind test = TestKind::bootstrap;
  BootstrapConfig bootstrap;
  OracleConfig oracle;
  sdp::SolverConfig solver;
  std::uint64_t seed = 1;
  bool parallel = true;
  int threads = 0;

  void validate() const;
};

struct PowerPoint {
  double grid_value = 0.0;
  double rejection_rate = 0.0;
  double stderr_ = 0.0;
  int M = 0;
  int B = 0;
  std::uint64_t seed = 0;
  int failures = 0;
};

// Applies one grid value to copies of the generator and deletion specs.
void set_grid_value(const std::string& param, double value, GeneratorSpec& gen, std::optional<DeletionSpec>& del);

// Decision of one repetition; failures are reported through *failed.
bool run_repetition(const PowerCurveSpec& spec, std::size_t grid_index, int rep, bool* failed);

std::vector<PowerPoint> power_curve(const PowerCurveSpec& spec);
void write_power_csv(std::ostream& out, const std::vector<PowerPoint>& pts);

}  // namespace mcar::sim
