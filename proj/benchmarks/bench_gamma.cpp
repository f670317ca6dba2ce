#include "benchmark/benchmark.h"

#include "shesim/operators.hpp"
#include "shesim/rng.hpp"

using namespace shesim;

static void BM_GammaNormMc(benchmark::State& state) {
  const int rank = static_cast<int>(state.range(0));
  EigenSystem basis(1, 8);
  FiniteRankOperator R;
  for (int c = 0; c < rank; ++c) {
    SpectralField col(basis);
    for (int k = 0; k < 8; ++k)
      col[k] = rng::normal(3, rng::kInit, 0, static_cast<std::uint32_t>(c),
                           static_cast<std::uint32_t>(k));
    R.add_column(c, synthesize(col, 63));
  }
  for (auto _ : state)
    benchmark::DoNotOptimize(gamma_norm_mc(R, 2.0, 1000, 5));
}
BENCHMARK(BM_GammaNormMc)->Arg(1)->Arg(4)->Arg(8);

static void BM_CqCondition(benchmark::State& state) {
  const NoiseSpec spec =
      NoiseSpec::parametric_law(1, static_cast<int>(state.range(0)), 1.0, 3.0, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(check_cq_condition(spec));
}
BENCHMARK(BM_CqCondition)->Arg(64)->Arg(1024);
