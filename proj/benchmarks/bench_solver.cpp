#include "benchmark/benchmark.h"

#include "shesim/solver.hpp"

using namespace shesim;

static void BM_ExpEulerPath(benchmark::State& state) {
  SimConfig cfg;
  cfg.horizon = 0.25;
  cfg.steps = static_cast<int>(state.range(0));
  cfg.modes_per_axis = static_cast<int>(state.range(1));
  const EigenSystem basis(1, cfg.modes_per_axis);
  SpectralField X0(basis);
  X0[0] = 1.0;
  const NoiseSpec spec = NoiseSpec::parametric_law(1, cfg.modes_per_axis, 1.0, 1.0, 0.0);
  const ScalarFn f = ScalarFn::sine_offset(0.25, 0.0);
  const ScalarFn g = ScalarFn::sine_offset(0.1, 1.0);
  std::uint64_t id = 0;
  for (auto _ : state) {
    const WienerPath W =
        sample_wiener_increments(spec, cfg.steps, cfg.horizon, 99, id++);
    benchmark::DoNotOptimize(exp_euler_solve(cfg, X0, W, spec, f, g));
  }
  state.SetItemsProcessed(state.iterations() * cfg.steps);
}
BENCHMARK(BM_ExpEulerPath)->Args({256, 16})->Args({256, 64})->Args({1024, 64});

static void BM_OuExactPath(benchmark::State& state) {
  SimConfig cfg;
  cfg.horizon = 1.0;
  cfg.steps = static_cast<int>(state.range(0));
  cfg.modes_per_axis = 64;
  const EigenSystem basis(1, 64);
  const SpectralField X0(basis);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 64, 1.0, 2.0, 0.0);
  std::uint64_t id = 0;
  for (auto _ : state) {
    const WienerPath W =
        sample_wiener_increments(spec, cfg.steps, cfg.horizon, 99, id++);
    benchmark::DoNotOptimize(ou_exact_solve(cfg, X0, W, spec));
  }
  state.SetItemsProcessed(state.iterations() * cfg.steps);
}
BENCHMARK(BM_OuExactPath)->Arg(256)->Arg(1024);

static void BM_FactorizedConvolution(benchmark::State& state) {
  const int M = static_cast<int>(state.range(0));
  const EigenSystem basis(1, 16);
  const SpectralField X0(basis);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 16, 1.0, 2.0, 0.0);
  SolutionPath path;
  path.times.resize(static_cast<std::size_t>(M) + 1);
  for (int m = 0; m <= M; ++m) path.times[m] = 0.25 * m / M;
  path.snapshots.assign(static_cast<std::size_t>(M) + 1, X0);
  const WienerPath W = sample_wiener_increments(spec, M, 0.25, 7, 0);
  for (auto _ : state)
    benchmark::DoNotOptimize(
        stochastic_convolution_factorized(path, ScalarFn::constant(1.0), W, spec, 0.4));
}
BENCHMARK(BM_FactorizedConvolution)->Arg(512)->Arg(2048);
