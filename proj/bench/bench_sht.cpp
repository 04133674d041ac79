// Factorized OpenMP transforms against the serial direct-summation baseline.
// Thread count follows OMP_NUM_THREADS; the baseline is single-threaded
// whatever the setting.

#include <benchmark/benchmark.h>
#include <omp.h>

#include "s2opt/grid.hpp"
#include "s2opt/random.hpp"
#include "s2opt/sht.hpp"
#include "s2opt/wavelet.hpp"

using namespace s2opt;

namespace {

HarmonicCoeffs coeffs(int L, int spin) {
  CounterRng rng(L);
  HarmonicCoeffs c(L, spin);
  for (int l = std::abs(spin); l < L; ++l)
    for (int m = -l; m <= l; ++m) c.at(l, m) = rng.complex_normal();
  return c;
}

template <bool Reference>
void inverse(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const int spin = static_cast<int>(state.range(1));
  const auto grid = make_grid(L);
  const auto f = coeffs(L, spin);
  CVec map(grid->size());
  for (auto _ : state) {
    if constexpr (Reference)
      reference::sht_synthesize(*grid, spin, f.coeffs, map);
    else
      sht_synthesize(*grid, spin, f.coeffs, map);
    benchmark::DoNotOptimize(map.data());
  }
  state.counters["threads"] = Reference ? 1 : omp_get_max_threads();
}

template <bool Reference>
void forward(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const int spin = static_cast<int>(state.range(1));
  const auto grid = make_grid(L);
  const SphMap x = sht_inverse(coeffs(L, spin), grid);
  CVec out(static_cast<std::size_t>(L) * L);
  for (auto _ : state) {
    if constexpr (Reference)
      reference::sht_analyze(*grid, spin, x.values, true, out);
    else
      sht_analyze(*grid, spin, x.values, true, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["threads"] = Reference ? 1 : omp_get_max_threads();
}

void wavelet_round_trip(benchmark::State& state) {
  const int L = static_cast<int>(state.range(0));
  const int N = static_cast<int>(state.range(1));
  const auto grid = make_grid(L);
  const auto k = build_kernels({L, 2.0, 0, N});
  const SphMap x = sht_inverse(coeffs(L, 0), grid);
  for (auto _ : state) {
    const auto w = wavelet_analysis(x, k);
    benchmark::DoNotOptimize(wavelet_synthesis(w, k).values.data());
  }
}

// The O(L^4) baseline is capped at L = 32 to keep the run short.
BENCHMARK(inverse<false>)->ArgsProduct({{16, 32, 64, 128}, {0, 2}})->Unit(benchmark::kMillisecond);
BENCHMARK(inverse<true>)->ArgsProduct({{16, 32}, {0, 2}})->Unit(benchmark::kMillisecond);
BENCHMARK(forward<false>)->ArgsProduct({{16, 32, 64, 128}, {0, 2}})->Unit(benchmark::kMillisecond);
BENCHMARK(forward<true>)->ArgsProduct({{16, 32}, {0, 2}})->Unit(benchmark::kMillisecond);
BENCHMARK(wavelet_round_trip)->ArgsProduct({{32, 64}, {1, 3}})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
