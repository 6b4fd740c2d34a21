// Serial reference loops against their OpenMP counterparts.

#include "bprocova/prior.hpp"
#include "bprocova/sampler.hpp"
#include "bprocova/simulation.hpp"

#include <benchmark/benchmark.h>

namespace {

using bprocova::Execution;

Execution mode(const benchmark::State& state) {
  return state.range(0) == 0 ? Execution::serial : Execution::parallel;
}

void BM_Scenario(benchmark::State& state) {
  bprocova::ScenarioConfig c;
  c.trial_N = 100;
  c.hist_N = 500;
  c.rho_H = 0.5;
  c.replicates = 16;
  c.iterations = 500;
  c.burn_in = 50;
  for (auto _ : state) {
    benchmark::DoNotOptimize(bprocova::run_scenario(c, mode(state)));
  }
  state.SetLabel(state.range(0) == 0 ? "serial" : "openmp");
}

void BM_Bootstrap(benchmark::State& state) {
  bprocova::ScenarioConfig c;
  c.hist_N = 500;
  c.rho_H = 0.5;
  const auto data = bprocova::generate_pair(c, 0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bprocova::bootstrap_delta_variance(data.first, 100, 2000, 7, mode(state)));
  }
  state.SetLabel(state.range(0) == 0 ? "serial" : "openmp");
}

void BM_Sbc(benchmark::State& state) {
  bprocova::SbcConfig cfg;
  cfg.replications = 40;
  cfg.seed = 11;
  cfg.gibbs.iterations = 500;
  cfg.gibbs.burn_in = 100;
  const auto prior = bprocova::reference_sbc_prior();
  const auto generator = bprocova::linear_model_generator(25);
  for (auto _ : state) {
    benchmark::DoNotOptimize(bprocova::sbc_validate(prior, generator, cfg, mode(state)));
  }
  state.SetLabel(state.range(0) == 0 ? "serial" : "openmp");
}

}  // namespace

BENCHMARK(BM_Scenario)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Bootstrap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Sbc)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
