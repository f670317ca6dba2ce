#include "benchmark/benchmark.h"

#include "shesim/field.hpp"
#include "shesim/norms.hpp"
#include "shesim/rng.hpp"

using namespace shesim;

namespace {

SpectralField random_field(const EigenSystem& basis, std::uint64_t seed) {
  SpectralField x(basis);
  for (int k = 0; k < basis.mode_count(); ++k)
    x[k] = rng::normal(seed, rng::kInit, 0, static_cast<std::uint32_t>(k), 0);
  return x;
}

} // namespace

static void BM_Synthesize1d(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  EigenSystem basis(1, N);
  const SpectralField x = random_field(basis, 1);
  const DstPlan plan(basis, 2 * N);
  GridField u(1, 2 * N);
  for (auto _ : state) {
    plan.synthesize_into(x.coeffs, u.values);
    benchmark::DoNotOptimize(u.values.data());
  }
  state.SetItemsProcessed(state.iterations() * N * 2 * N);
}
BENCHMARK(BM_Synthesize1d)->Arg(16)->Arg(64)->Arg(256);

static void BM_RoundTrip1d(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  EigenSystem basis(1, N);
  const SpectralField x = random_field(basis, 1);
  const DstPlan plan(basis, 2 * N);
  GridField u(1, 2 * N);
  std::vector<double> back(static_cast<std::size_t>(N));
  for (auto _ : state) {
    plan.synthesize_into(x.coeffs, u.values);
    plan.analyze_into(u.values, back);
    benchmark::DoNotOptimize(back.data());
  }
}
BENCHMARK(BM_RoundTrip1d)->Arg(16)->Arg(64)->Arg(256);

static void BM_Synthesize2d(benchmark::State& state) {
  const int N = static_cast<int>(state.range(0));
  EigenSystem basis(2, N);
  const SpectralField x = random_field(basis, 1);
  const DstPlan plan(basis, 2 * N);
  GridField u(2, 2 * N);
  for (auto _ : state) {
    plan.synthesize_into(x.coeffs, u.values);
    benchmark::DoNotOptimize(u.values.data());
  }
}
BENCHMARK(BM_Synthesize2d)->Arg(8)->Arg(32);

static void BM_HolderNorm(benchmark::State& state) {
  const int ng = static_cast<int>(state.range(0));
  EigenSystem basis(1, 16);
  const GridField u = synthesize(random_field(basis, 2), ng);
  for (auto _ : state) benchmark::DoNotOptimize(holder_norm(u, 0.5));
}
BENCHMARK(BM_HolderNorm)->Arg(127)->Arg(255);
