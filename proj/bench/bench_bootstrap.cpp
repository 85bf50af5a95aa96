// Serial vs OpenMP bootstrap replicates and power-curve repetitions.

#include <benchmark/benchmark.h>

#include <numbers>

#include "mcar/hypothesis.hpp"
#include "mcar/simulate.hpp"

using namespace mcar;

namespace {

struct Fixture {
  std::shared_ptr<const PatternSet> ps;
  std::vector<Matrix> transformed;
};

const Fixture& fixture() {
  static const Fixture f = [] {
    sim::GeneratorSpec g;
    g.thetas = {std::numbers::pi / 2, std::numbers::pi / 3, std::numbers::pi / 6};
    g.n = 200;
    g.seed = 11;
    auto gs = sim::generate_cycle(g);
    sdp::SolverConfig scfg;
    IncompatibilityReport rep;
    omnibus_statistic(gs.ps, gs.data, true, true, scfg, &rep);
    return Fixture{gs.ps, null_transform(gs.ps, gs.data, rep, true, true).data};
  }();
  return f;
}

void BM_ReplicatesSerial(benchmark::State& st) {
  const auto& f = fixture();
  BootstrapConfig cfg;
  cfg.B = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(bootstrap_replicates_serial(f.ps, f.transformed, cfg, {}));
  st.SetItemsProcessed(st.iterations() * cfg.B);
}

void BM_ReplicatesParallel(benchmark::State& st) {
  const auto& f = fixture();
  BootstrapConfig cfg;
  cfg.B = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(bootstrap_replicates_parallel(f.ps, f.transformed, cfg, {}));
  st.SetItemsProcessed(st.iterations() * cfg.B);
}

sim::PowerCurveSpec curve(bool parallel) {
  sim::PowerCurveSpec s;
  s.name = "bench";
  s.generator.thetas = {std::numbers::pi / 2, std::numbers::pi / 3, std::numbers::pi / 6};
  s.generator.n = 200;
  s.grid = {std::numbers::pi / 2};
  s.M = 8;
  s.test = sim::TestKind::bootstrap;
  s.bootstrap.B = 19;
  s.parallel = parallel;
  return s;
}

void BM_PowerSerial(benchmark::State& st) {
  auto s = curve(false);
  for (auto _ : st) benchmark::DoNotOptimize(sim::power_curve(s));
}

void BM_PowerParallel(benchmark::State& st) {
  auto s = curve(true);
  for (auto _ : st) benchmark::DoNotOptimize(sim::power_curve(s));
}

}  // namespace

BENCHMARK(BM_ReplicatesSerial)->Arg(19)->Arg(99)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ReplicatesParallel)->Arg(19)->Arg(99)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PowerSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PowerParallel)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
