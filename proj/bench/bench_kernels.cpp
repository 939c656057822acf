// Parallel kernels against their serial references. Thread count follows
// COHIMPACT_THREADS / OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "cohimpact/dimer.hpp"
#include "cohimpact/heom.hpp"
#include "cohimpact/impact.hpp"
#include "cohimpact/units.hpp"

using namespace cohimpact;

namespace {

HeomModel fast_bath_dimer(int depth, int nk) {
  dimer::DimerParams p;
  p.detuning = units::wavenumber(100);
  p.coupling = units::wavenumber(100);
  p.bath = DrudeLorentzBath{p.coupling / 10, 1.0 / units::femtoseconds(2.65), units::kelvin(300), nk};
  return dimer::build_heom(p, depth);
}

template <bool Parallel>
void heom_apply(benchmark::State& state) {
  const HeomGenerator gen(fast_bath_dimer(static_cast<int>(state.range(0)), static_cast<int>(state.range(1))));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  std::vector<cplx> in(gen.size()), out(gen.size());
  for (auto& x : in) x = {g(rng), g(rng)};
  for (auto _ : state) {
    if constexpr (Parallel)
      gen.apply(in.data(), out.data());
    else
      gen.apply_serial(in.data(), out.data());
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["ados"] = static_cast<double>(gen.ado_count());
}

template <bool Parallel>
void sampling(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Matrix m = random_hermitian(static_cast<Index>(state.range(0)), rng);
  for (auto _ : state) {
    const double v = Parallel ? brute_force_impact(m, 1 << 16, 3) : brute_force_impact_serial(m, 1 << 16, 3);
    benchmark::DoNotOptimize(v);
  }
}

}  // namespace

BENCHMARK(heom_apply<true>)->Args({3, 3})->Args({5, 3})->Args({5, 5})->Unit(benchmark::kMicrosecond);
BENCHMARK(heom_apply<false>)->Args({3, 3})->Args({5, 3})->Args({5, 5})->Unit(benchmark::kMicrosecond);
BENCHMARK(sampling<true>)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);
BENCHMARK(sampling<false>)->Arg(4)->Arg(12)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
