// Serial reference vs OpenMP advance on the same ensembles.

#include <benchmark/benchmark.h>

#include "jarz/interpolant.hpp"
#include "jarz/kernels.hpp"
#include "jarz/models.hpp"
#include "jarz/smc.hpp"

namespace {

using namespace jarz;

template <bool Serial>
void rbm_advance(benchmark::State& state) {
  const auto m = ModelDescriptor::bernoulli_rbm(6, 4);
  Rng rng = make_stream(1, 0);
  const auto theta = random_parameters(m, 1.0, rng);
  const GibbsKernel kernel(m);
  Ensemble e = init_ensemble(m, zero_parameters(m), static_cast<std::size_t>(state.range(0)), 2);
  for (auto _ : state) {
    if constexpr (Serial) {
      serial::advance(e, kernel, theta, theta);
    } else {
      advance(e, kernel, theta, theta);
    }
    benchmark::DoNotOptimize(e.walkers.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Serial>
void ula_advance(benchmark::State& state) {
  const auto m = ModelDescriptor::gaussian(8);
  const auto theta = zero_parameters(m);
  const UlaKernel kernel(m, 1e-3);
  Ensemble e = init_ensemble(m, theta, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) {
    if constexpr (Serial) {
      serial::advance(e, kernel, theta, theta);
    } else {
      advance(e, kernel, theta, theta);
    }
    benchmark::DoNotOptimize(e.walkers.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Serial>
void drifted_advance(benchmark::State& state) {
  const auto path = GaussianPath::benchmark();
  std::vector<StatePoint> states(static_cast<std::size_t>(state.range(0)), StatePoint{{0.0}, {}});
  Ensemble e = init_ensemble(states, 0.0, 4);
  for (auto _ : state) {
    if constexpr (Serial) {
      serial::advance_drifted(e, path, 0.25, 0.25 + 1.0 / 64.0, 1.0 / 64.0, 1.0);
    } else {
      advance_drifted(e, path, 0.25, 0.25 + 1.0 / 64.0, 1.0 / 64.0, 1.0);
    }
    benchmark::DoNotOptimize(e.walkers.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

BENCHMARK(rbm_advance<true>)->Name("gibbs/serial")->Arg(10000);
BENCHMARK(rbm_advance<false>)->Name("gibbs/openmp")->Arg(10000)->UseRealTime();
BENCHMARK(ula_advance<true>)->Name("ula/serial")->Arg(10000);
BENCHMARK(ula_advance<false>)->Name("ula/openmp")->Arg(10000)->UseRealTime();
BENCHMARK(drifted_advance<true>)->Name("drifted/serial")->Arg(4096);
BENCHMARK(drifted_advance<false>)->Name("drifted/openmp")->Arg(4096)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
