#include <benchmark/benchmark.h>

#include "helpers.hpp"
#include "qfb/control.hpp"
#include "qfb/serialize.hpp"
#include "qfb/sim.hpp"

using namespace qfb;
using namespace qfb::test;

namespace {

void BM_PropagatorStep(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const HermitianOperator h = random_hermitian(state.range(0), rng);
  for (auto _ : state) {
    benchmark::DoNotOptimize(propagator_step(h, 0.37));
  }
}
BENCHMARK(BM_PropagatorStep)->Arg(2)->Arg(4)->Arg(8)->Arg(16)->Arg(32)->Arg(64);

void BM_StageCost(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Eigen::Index dim = 8;
  const ControlledHamiltonian ham(random_hermitian(dim, rng), {random_hermitian(dim, rng)});
  const CostSpec cost{random_psd(dim, rng), {}, {0.1}};
  for (auto _ : state) {
    benchmark::DoNotOptimize(stage_cost(ham, cost, control1(0.4), 0.8, state.range(0)));
  }
}
BENCHMARK(BM_StageCost)->Arg(8)->Arg(16)->Arg(32)->Arg(64)->Arg(128);

void BM_BellmanKet(benchmark::State& state) {
  const Scenario s = reference_qubit_scenario(static_cast<int>(state.range(0)));
  const Ket psi0 = basis_ket(2, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bellman_ket(s, psi0).value);
  }
}
BENCHMARK(BM_BellmanKet)->Arg(1)->Arg(2)->Arg(3)->Arg(4)->Arg(5);

void BM_OracleEnumeration(benchmark::State& state) {
  const Scenario s = reference_qubit_scenario(static_cast<int>(state.range(0)));
  const Ket psi0 = basis_ket(2, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(enumerate_strategies_oracle(s, psi0).value);
  }
}
BENCHMARK(BM_OracleEnumeration)->Arg(1)->Arg(2)->Arg(3);

void BM_EstimateRisk(benchmark::State& state) {
  const Scenario s = reference_qubit_scenario();
  const SolveReport dp = bellman_ket(s, basis_ket(2, 1));
  SimConfig cfg;
  cfg.trajectories = state.range(0);
  cfg.seed = 3;
  for (auto _ : state) {
    benchmark::DoNotOptimize(estimate_risk(s, cfg, dp.strategy, basis_ket(2, 1)).mean_risk);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EstimateRisk)->Arg(1000)->Arg(10000)->Arg(100000);

void BM_ParseScenario(benchmark::State& state) {
  const std::string text = canonical_scenario_json(reference_qubit_scenario());
  for (auto _ : state) {
    benchmark::DoNotOptimize(parse_scenario_string(text).dim);
  }
}
BENCHMARK(BM_ParseScenario);

}  // namespace

BENCHMARK_MAIN();
