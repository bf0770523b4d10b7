#include "esqpt/classical.hpp"
#include "esqpt/model.hpp"
#include "esqpt/quench.hpp"
#include "esqpt/spectral.hpp"
#include "esqpt/spin.hpp"
#include "esqpt/twa.hpp"

#include <benchmark/benchmark.h>

using namespace esqpt;

namespace {

ModelParams two_spin(double s, double v) {
  ModelParams p;
  p.spin = SpinSize(s);
  p.v = v;
  return p;
}

void BM_SectorHamiltonian(benchmark::State& state) {
  const auto p = two_spin(static_cast<double>(state.range(0)), 7.0);
  for (auto _ : state) benchmark::DoNotOptimize(sector_hamiltonian(p, Sector::even));
}
BENCHMARK(BM_SectorHamiltonian)->Arg(10)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);

void BM_EigensolveEvenSector(benchmark::State& state) {
  const auto p = two_spin(static_cast<double>(state.range(0)), 7.0);
  const bool vectors = state.range(1) != 0;
  for (auto _ : state) benchmark::DoNotOptimize(solve_model(p, Sector::even, SolveOptions{vectors}));
}
BENCHMARK(BM_EigensolveEvenSector)
    ->Args({10, 1})
    ->Args({20, 0})
    ->Args({20, 1})
    ->Unit(benchmark::kMillisecond);

void BM_CoherentState(benchmark::State& state) {
  const SpinSize s(static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(coherent_state(2.0, 0.3, s));
}
BENCHMARK(BM_CoherentState)->Arg(50)->Arg(500)->Arg(2000);

void BM_DiagonalEnsembleAverage(benchmark::State& state) {
  const auto p = two_spin(static_cast<double>(state.range(0)), 2.0);
  const SpectralData sd = solve_model(p, Sector::full);
  DiagonalEnsemble de(sd, default_degeneracy_tol(p.spin));
  const LocalObservable o(SpinComponent::x, Slot::system, p.spin);
  de.prepare(o);
  const OverlapVector c = overlaps(initial_product_state(p, 1.0), sd);
  for (auto _ : state) benchmark::DoNotOptimize(de.average(c, o));
}
BENCHMARK(BM_DiagonalEnsembleAverage)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_Integrate(benchmark::State& state) {
  ModelParams p;
  p.v = 13.0;
  const auto x0 = chaos_map_start(1.0, p.lambda);
  for (auto _ : state) benchmark::DoNotOptimize(integrate(x0, p, static_cast<double>(state.range(0))));
}
BENCHMARK(BM_Integrate)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Lyapunov(benchmark::State& state) {
  ModelParams p;
  p.v = 5.0;
  LyapunovOptions o;
  o.duration = 1000.0;
  const auto x0 = chaos_map_start(1.05, p.lambda);
  for (auto _ : state) benchmark::DoNotOptimize(lyapunov_max(x0, p, o));
}
BENCHMARK(BM_Lyapunov)->Unit(benchmark::kMillisecond);

void BM_TwaMembers(benchmark::State& state) {
  const auto p = two_spin(50.0, 2.0);
  const auto ens = twa_sample(0.0, p, static_cast<std::size_t>(state.range(0)), 7);
  TwaOptions o;
  o.times = time_grid(10.0, 0.1);
  o.window.reset();
  for (auto _ : state) benchmark::DoNotOptimize(twa_expectation(ens, p, o));
}
BENCHMARK(BM_TwaMembers)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
