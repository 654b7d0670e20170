// Parallel kernels against their serial references.
#include <benchmark/benchmark.h>

#include "epibarrier/barrier.hpp"
#include "epibarrier/policy.hpp"

using namespace epibarrier;

namespace {

Scenario seir_imperfect() {
  return validate_scenario({{"variant", "SEIR_IMPERFECT"},
                            {"beta", {0.8, 1.0}},
                            {"gamma", {1.0 / 5.0, 1.0 / 3.0}},
                            {"eta", {1.0 / 7.0, 1.0 / 5.0}},
                            {"i_max", 0.1}});
}

Scenario sir_imperfect() {
  return validate_scenario({{"variant", "SIR_IMPERFECT"}, {"beta", {0.6, 0.8}}, {"gamma", {0.3, 0.5}}, {"i_max", 0.2}});
}

Scenario sir_perfect() {
  return validate_scenario({{"variant", "SIR_PERFECT"}, {"beta", {0.6, 0.8}}, {"gamma", 0.5}, {"i_max", 0.02}});
}

void BM_AssembleSeir(benchmark::State& state) {
  const Scenario s = seir_imperfect();
  AssembleOptions opt;
  opt.n_curves = 30;
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    ComputedSet set = parallel ? assemble_set(s, SetKind::Mrpi, Tolerances{}, opt)
                               : assemble_set_serial(s, SetKind::Mrpi, Tolerances{}, opt);
    benchmark::DoNotOptimize(set.curves.data());
  }
}
BENCHMARK(BM_AssembleSeir)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_MonteCarlo(benchmark::State& state) {
  const Scenario s = sir_imperfect();
  const Policy p = feedback_policy(s);
  const StateVec x0 = StateVec::sir(0.8, 0.1);
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    auto runs = parallel ? monte_carlo(s, x0, p, 32, 1, 200.0, Tolerances{})
                         : monte_carlo_serial(s, x0, p, 32, 1, 200.0, Tolerances{});
    benchmark::DoNotOptimize(runs.data());
  }
}
BENCHMARK(BM_MonteCarlo)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_OracleGrid(benchmark::State& state) {
  const Scenario s = sir_perfect();
  const ComputedSet a = assemble_set(s, SetKind::Admissible, Tolerances{});
  const ComputedSet m = assemble_set(s, SetKind::Mrpi, Tolerances{});
  const bool parallel = state.range(0) != 0;
  for (auto _ : state) {
    auto cells = parallel ? oracle_grid(s, SetKind::Mrpi, {&a, &m}, 12, 10, 1, Tolerances{})
                          : oracle_grid_serial(s, SetKind::Mrpi, {&a, &m}, 12, 10, 1, Tolerances{});
    benchmark::DoNotOptimize(cells.data());
  }
}
BENCHMARK(BM_OracleGrid)->ArgName("parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
