// E-step and M-step throughput: serial reference vs the OpenMP kernels.
//
//   bench_kernels --benchmark_filter=EStep

#include <benchmark/benchmark.h>

#include <cmath>
#include <map>

#include "mixsel/em.hpp"
#include "mixsel/kernels.hpp"
#include "mixsel/simulate.hpp"

using namespace mixsel;

namespace {

struct Fixture {
  SimulatedData sim;
  Model model;
  Parameters theta;
  FuzzyPartition fuzzy;
};

// Mixed data with 10% MCAR and a converged g = 3 fit to evaluate against.
const Fixture& fixture(std::size_t n) {
  static std::map<std::size_t, Fixture> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  ScenarioSpec spec;
  spec.family = Family::MixedIndep;
  spec.n = n;
  spec.d = 48;
  spec.target_error = 0.1;
  spec.missing_rate = 0.1;
  spec.seed = 17;
  Fixture f;
  f.sim = simulate(spec);
  f.model = Model::all_relevant(3, spec.d);
  EmConfig cfg;
  cfg.n_starts = 1;
  cfg.max_iterations = 20;
  const EmResult r = run_em(f.sim.data, f.model, cfg);
  f.theta = r.theta;
  f.fuzzy = r.fuzzy;
  return cache.emplace(n, std::move(f)).first->second;
}

void BM_EStepReference(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  FuzzyPartition out;
  for (auto _ : state) benchmark::DoNotOptimize(kernels::estep_reference(f.sim.data, f.model, f.theta, out));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_EStep(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  const kernels::Workspace ws(f.sim.data);
  FuzzyPartition out;
  const int threads = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::estep(ws, f.model, f.theta, out, threads));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MStep(benchmark::State& state) {
  const Fixture& f = fixture(static_cast<std::size_t>(state.range(0)));
  const kernels::Workspace ws(f.sim.data);
  const int threads = static_cast<int>(state.range(1));
  const double c = 0.5 * std::log(static_cast<double>(state.range(0)));
  for (auto _ : state) {
    auto out = kernels::mstep(ws, f.model.omega, f.fuzzy, c, kernels::EmptyComponentPolicy::Floor, threads);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_EStepReference)->Arg(1000)->Arg(20000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_EStep)->ArgsProduct({{1000, 20000}, {1, 2, 4}})->Unit(benchmark::kMicrosecond)->UseRealTime();
BENCHMARK(BM_MStep)->ArgsProduct({{1000, 20000}, {1, 2, 4}})->Unit(benchmark::kMicrosecond)->UseRealTime();

BENCHMARK_MAIN();
