#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "shesim/regularity.hpp"
#include "shesim/rng.hpp"

using namespace shesim;

namespace {

// ensemble of single-mode paths with coefficient trajectory c(t) supplied
// per (path, time)
template <typename Fn>
EnsembleData synthetic_ensemble(int paths, const std::vector<double>& times, Fn&& coeff) {
  EnsembleData e;
  e.dim = 1;
  e.modes_per_axis = 1;
  e.horizon = times.back();
  e.master_seed = 1234;
  e.times = times;
  e.attempted_paths = paths;
  for (int p = 0; p < paths; ++p) {
    std::vector<double> row(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) row[i] = coeff(p, times[i]);
    e.path_ids.push_back(static_cast<std::uint64_t>(p));
    e.coefficients.push_back(std::move(row));
  }
  return e;
}

std::vector<double> dyadic_times(double T, int steps) {
  std::vector<double> t(static_cast<std::size_t>(steps) + 1);
  for (int m = 0; m <= steps; ++m) t[m] = T * m / steps;
  return t;
}

LagSpec lag_spec(const std::vector<double>& lags, const std::vector<double>& anchors) {
  LagSpec s;
  s.lags = lags;
  s.anchors = anchors;
  return s;
}

} // namespace

TEST_CASE("estimator recovers the Brownian exponent 1/2") {
  const int steps = 512;
  const double T = 1.0;
  const auto times = dyadic_times(T, steps);
  const double dt = T / steps;
  // sample Brownian paths on the grid (lambda = 0, lambda_Q = 1)
  std::vector<std::vector<double>> b(1200, std::vector<double>(times.size(), 0.0));
  for (int p = 0; p < 1200; ++p)
    for (std::size_t m = 1; m < times.size(); ++m)
      b[p][m] = b[p][m - 1] + std::sqrt(dt) * rng::normal(5, rng::kWiener,
                                                          static_cast<std::uint64_t>(p),
                                                          static_cast<std::uint32_t>(m), 0);
  const EnsembleData ens =
      synthetic_ensemble(1200, times, [&](int p, double t) {
        return b[static_cast<std::size_t>(p)][static_cast<std::size_t>(std::llround(t / dt))];
      });

  const LagSpec lags = lag_spec({4 * dt, 8 * dt, 16 * dt, 32 * dt, 64 * dt},
                                {0.25, 0.375, 0.5, 0.625});
  for (const double p : {2.0, 4.0}) {
    const HolderEstimate est =
        temporal_holder_estimate(ens, p, NormKind::Lq, 0.0, lags, 2.0, 16, 99);
    CHECK(est.reported);
    CHECK(est.exponent == doctest::Approx(0.5).epsilon(0.1)); // 0.50 +- 0.05
    CHECK(std::abs(est.exponent - 0.5) < 0.05);
    CHECK(est.r_squared > 0.99);
    CHECK(est.std_error < 0.05);
  }
}

TEST_CASE("estimator recovers deterministic power-law exponents from the origin") {
  const int steps = 256;
  const auto times = dyadic_times(1.0, steps);
  const double dt = 1.0 / steps;
  for (const double a : {0.3, 0.9}) {
    const EnsembleData ens =
        synthetic_ensemble(50, times, [&](int, double t) { return std::pow(t, a); });
    const LagSpec lags =
        lag_spec({4 * dt, 8 * dt, 16 * dt, 32 * dt, 64 * dt, 128 * dt}, {0.0});
    const HolderEstimate est =
        temporal_holder_estimate(ens, 2.0, NormKind::Lq, 0.0, lags, 2.0, 8, 3);
    CHECK(est.reported);
    CHECK(std::abs(est.exponent - a) < 0.05);
    CHECK(est.r_squared > 0.999);
  }
}

TEST_CASE("estimator withholds constant-in-time ensembles") {
  const auto times = dyadic_times(1.0, 64);
  const EnsembleData ens = synthetic_ensemble(20, times, [](int, double) { return 2.5; });
  const LagSpec lags = lag_spec({4.0 / 64, 8.0 / 64, 16.0 / 64, 32.0 / 64 / 2, 8.0 / 64 * 2},
                                {0.25, 0.5});
  const HolderEstimate est =
      temporal_holder_estimate(ens, 2.0, NormKind::Lq, 0.0, lags, 2.0, 8, 3);
  CHECK_FALSE(est.reported);
}

TEST_CASE("estimator withholds when fewer than 5 lags are used") {
  const auto times = dyadic_times(1.0, 64);
  const double dt = 1.0 / 64;
  const EnsembleData ens =
      synthetic_ensemble(30, times, [&](int, double t) { return std::sqrt(t + 0.01); });
  const LagSpec lags = lag_spec({4 * dt, 8 * dt, 16 * dt}, {0.25});
  const HolderEstimate est =
      temporal_holder_estimate(ens, 2.0, NormKind::Lq, 0.0, lags, 2.0, 8, 3);
  CHECK_FALSE(est.reported);
  CHECK(est.lags_used == 3);
}

TEST_CASE("spatial sweep: deterministic smooth field is bounded at every theta") {
  // band-limited field, identical across paths and resolutions
  std::vector<EnsembleData> ens;
  for (const int N : {8, 16, 32}) {
    EnsembleData e;
    e.dim = 1;
    e.modes_per_axis = N;
    e.horizon = 1.0;
    e.master_seed = 77;
    e.times = {0.0, 1.0};
    e.attempted_paths = 4;
    for (int p = 0; p < 4; ++p) {
      std::vector<double> row(2 * static_cast<std::size_t>(N), 0.0);
      for (int k = 0; k < std::min(N, 4); ++k) row[static_cast<std::size_t>(N) + k] = 1.0 / (k + 1);
      e.path_ids.push_back(static_cast<std::uint64_t>(p));
      e.coefficients.push_back(std::move(row));
    }
    ens.push_back(std::move(e));
  }
  const auto rows = spatial_regularity_sweep(ens, {0.0, 0.8, 1.6}, 2.0);
  for (const auto& row : rows) CHECK(row.bounded);
}

TEST_CASE("spatial sweep: stationary OU tail flips the verdict across theta = 3/2") {
  // exact stationary coefficients var_k = lamQ_k (1-e^{-2 lam T})/(2 lam),
  // lamQ = k^-2: the mean-square E^theta series converges iff theta < 3/2
  const double T = 0.5;
  std::vector<EnsembleData> ens;
  for (const int N : {32, 64, 128}) {
    EigenSystem basis(1, N);
    EnsembleData e;
    e.dim = 1;
    e.modes_per_axis = N;
    e.horizon = T;
    e.master_seed = 31;
    e.times = {T};
    e.attempted_paths = 600;
    for (int p = 0; p < 600; ++p) {
      std::vector<double> row(static_cast<std::size_t>(N));
      for (int k = 0; k < N; ++k) {
        const double lam = basis.lambda(k);
        const double sd =
            std::sqrt(std::pow(k + 1.0, -2.0) * (1.0 - std::exp(-2.0 * lam * T)) / (2.0 * lam));
        // coupled across resolutions: same draw per (path, mode)
        row[static_cast<std::size_t>(k)] =
            sd * rng::normal(31, rng::kOuResidual, static_cast<std::uint64_t>(p), 0,
                             static_cast<std::uint32_t>(k));
      }
      e.path_ids.push_back(static_cast<std::uint64_t>(p));
      e.coefficients.push_back(std::move(row));
    }
    ens.push_back(std::move(e));
  }
  const auto rows = spatial_regularity_sweep(ens, {1.2, 1.4, 1.6, 1.8}, 2.0);
  CHECK(rows[0].bounded);
  CHECK(rows[1].bounded);
  CHECK_FALSE(rows[2].bounded);
  CHECK_FALSE(rows[3].bounded);
}

TEST_CASE("spatial sweep rejects uncoupled or inconsistent ensembles") {
  EnsembleData a;
  a.dim = 1;
  a.modes_per_axis = 8;
  a.horizon = 1.0;
  a.master_seed = 1;
  a.times = {1.0};
  a.coefficients = {{0, 0, 0, 0, 0, 0, 0, 1}};
  a.path_ids = {0};
  EnsembleData b = a;
  b.modes_per_axis = 16;
  b.coefficients = {std::vector<double>(16, 0.1)};
  EnsembleData c = b;
  c.modes_per_axis = 32;
  c.coefficients = {std::vector<double>(32, 0.1)};
  c.master_seed = 2; // uncoupled
  std::vector<EnsembleData> bad{a, b, c};
  CHECK_THROWS_AS(spatial_regularity_sweep(bad, {0.5}, 2.0), std::invalid_argument);
  std::vector<EnsembleData> two{a, b};
  CHECK_THROWS_AS(spatial_regularity_sweep(two, {0.5}, 2.0), std::invalid_argument);
}

TEST_CASE("moment bound: free flow stays below the bound with ratio <= 1") {
  EigenSystem basis(1, 4);
  SpectralField X0(basis);
  X0[0] = 1.0;
  X0[2] = -0.5;
  const auto times = dyadic_times(0.5, 8);
  EnsembleData e;
  e.dim = 1;
  e.modes_per_axis = 4;
  e.horizon = 0.5;
  e.master_seed = 3;
  e.times = times;
  e.attempted_paths = 3;
  for (int p = 0; p < 3; ++p) {
    std::vector<double> row(times.size() * 4);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const SpectralField s = apply_semigroup(X0, times[i]);
      for (int k = 0; k < 4; ++k) row[i * 4 + k] = s[k];
    }
    e.path_ids.push_back(static_cast<std::uint64_t>(p));
    e.coefficients.push_back(std::move(row));
  }
  const MomentReport rep = moment_bound_check(e, 4.0, 0.0, X0, 2.0, 64);
  CHECK(rep.pass);
  CHECK(rep.bound_ratio <= 1.0 + 1e-12);
  CHECK(rep.sup_moment > 0.0);
}

TEST_CASE("moment bound fails when blowups exceed the 0.1% budget") {
  EnsembleData e;
  e.dim = 1;
  e.modes_per_axis = 1;
  e.horizon = 1.0;
  e.master_seed = 3;
  e.times = {1.0};
  e.attempted_paths = 100;
  e.blowup_count = 1; // 1% > 0.1%
  for (int p = 0; p < 99; ++p) {
    e.path_ids.push_back(static_cast<std::uint64_t>(p));
    e.coefficients.push_back({0.1});
  }
  EigenSystem basis(1, 1);
  const MomentReport rep = moment_bound_check(e, 2.0, 0.0, SpectralField(basis), 2.0, 8);
  CHECK_FALSE(rep.pass);
}

TEST_CASE("lp continuity: deterministic flow decays monotonically; zero gap gives zero") {
  EigenSystem basis(1, 4);
  SpectralField X0(basis);
  X0[0] = 1.0;
  const auto times = dyadic_times(1.0, 128);
  EnsembleData e;
  e.dim = 1;
  e.modes_per_axis = 4;
  e.horizon = 1.0;
  e.master_seed = 3;
  e.times = times;
  e.attempted_paths = 2;
  for (int p = 0; p < 2; ++p) {
    std::vector<double> row(times.size() * 4);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const SpectralField s = apply_semigroup(X0, times[i]);
      for (int k = 0; k < 4; ++k) row[i * 4 + k] = s[k];
    }
    e.path_ids.push_back(static_cast<std::uint64_t>(p));
    e.coefficients.push_back(std::move(row));
  }
  std::vector<std::pair<double, double>> pairs;
  for (int g = 2; g <= 64; g *= 2) pairs.emplace_back(0.25, 0.25 + g / 128.0);
  const auto rep = lp_continuity_check(e, 4.0, 0.0, pairs, 2.0, 16);
  CHECK(rep.monotone);
  CHECK(rep.pass);

  // zero gap exactly
  const auto zero = lp_continuity_check(e, 4.0, 0.0, {{0.25, 0.25}}, 2.0, 16);
  CHECK(zero.moments.front() == 0.0);
}

TEST_CASE("burkholder: constant rank-1 integrands give scale-invariant ratios") {
  std::vector<StepIntegrand> family;
  EigenSystem basis(1, 4);
  for (const double scale : {0.5, 1.0, 3.0}) {
    StepIntegrand phi;
    phi.piece_times = {0.0, 1.0};
    FiniteRankOperator op;
    SpectralField x(basis);
    x[0] = scale;
    x[2] = 0.3 * scale;
    op.add_column(0, synthesize(x, 32));
    phi.pieces.push_back(std::move(op));
    family.push_back(std::move(phi));
  }
  const BurkholderReport rep = burkholder_check(family, 4.0, 2.0, 4, 64, 1.0, 300, 300, 5);
  REQUIRE(rep.ratios.size() == 3);
  CHECK(rep.ratios[0] == doctest::Approx(rep.ratios[1]).epsilon(1e-10));
  CHECK(rep.ratios[1] == doctest::Approx(rep.ratios[2]).epsilon(1e-10));
  CHECK(rep.ratios[0] > 0.0);
  CHECK(rep.underpowered); // 3 < 20
}

TEST_CASE("burkholder: zero integrand gives zero ratio; batch statistic holds") {
  std::vector<StepIntegrand> batch;
  EigenSystem basis(1, 4);
  for (int i = 0; i < 24; ++i) {
    StepIntegrand phi;
    phi.piece_times = {0.0, 0.5, 1.0};
    for (int pc = 0; pc < 2; ++pc) {
      FiniteRankOperator op;
      SpectralField x(basis);
      for (int k = 0; k < 4; ++k)
        x[k] = rng::normal(900 + i, rng::kInit, 8, static_cast<std::uint32_t>(pc),
                           static_cast<std::uint32_t>(k)) /
               (k + 1.0);
      op.add_column(i % 4, synthesize(x, 32));
      phi.pieces.push_back(std::move(op));
    }
    if (i % 6 == 5) {
      phi.modulation = StepIntegrand::Modulation::tanh_w;
      phi.modulation_mode = 1;
    }
    batch.push_back(std::move(phi));
  }
  StepIntegrand zero;
  zero.piece_times = {0.0, 1.0};
  zero.pieces.push_back(FiniteRankOperator{});
  zero.pieces.back().add_column(0, GridField(1, 32));
  batch.push_back(std::move(zero));

  const BurkholderReport rep = burkholder_check(batch, 4.0, 2.0, 4, 64, 1.0, 200, 200, 9);
  CHECK(rep.ratios.back() == 0.0);
  CHECK_FALSE(rep.underpowered);
  // the one-sided inequality: every nonzero ratio within 10x the median
  CHECK(rep.pass);
}

TEST_CASE("estimator on the free flow recovers min((beta-theta)/2, 1)") {
  // X(t) = S(t) X0 from the origin anchor. Coefficients k^{-e} give critical
  // smoothness beta = e - 1/2: e = 2.5 probes the fractional branch at
  // theta = 1 ((beta-theta)/2 = 1/2), e = 4 makes the cap at 1 bind.
  EigenSystem basis(1, 64);
  const int steps = 1024;
  const double T = 0.125;
  const double dt = T / steps;
  std::vector<double> times;
  for (int m = 0; m <= steps; ++m) times.push_back(T * m / steps);
  auto flow_ensemble = [&](double expo) {
    SpectralField X0(basis);
    for (int k = 0; k < 64; ++k) X0[k] = std::pow(k + 1.0, -expo);
    EnsembleData e;
    e.dim = 1;
    e.modes_per_axis = 64;
    e.horizon = T;
    e.master_seed = 8;
    e.times = times;
    e.attempted_paths = 1;
    std::vector<double> row(times.size() * 64);
    for (std::size_t i = 0; i < times.size(); ++i) {
      const SpectralField s = apply_semigroup(X0, times[i]);
      for (int k = 0; k < 64; ++k) row[i * 64 + k] = s[k];
    }
    e.path_ids.push_back(0);
    e.coefficients.push_back(std::move(row));
    return e;
  };
  LagSpec origin;
  origin.lags = {4 * dt, 8 * dt, 16 * dt, 32 * dt, 64 * dt};
  origin.anchors = {0.0};
  const HolderEstimate e1 =
      temporal_holder_estimate(flow_ensemble(2.5), 2.0, NormKind::Etheta, 1.0, origin, 2.0, 128, 5);
  CHECK(e1.reported);
  CHECK(std::abs(e1.exponent - 0.5) < 0.1); // (beta - theta)/2 = 1/2
  const HolderEstimate e0 =
      temporal_holder_estimate(flow_ensemble(4.0), 2.0, NormKind::Etheta, 0.0, origin, 2.0, 128, 5);
  CHECK(e0.reported);
  CHECK(std::abs(e0.exponent - 1.0) < 0.1); // capped at 1
}

TEST_CASE("moment bound on the additive OU ensemble matches the Gaussian moment") {
  // X0 = 0: sup_t E||X(t)||^4 is attained at t = T where the coefficients
  // are independent centred Gaussians; E||X||_{L2}^4 = (sum v)^2 + 2 sum v^2
  SimConfig cfg;
  cfg.horizon = 1.0;
  cfg.steps = 8;
  cfg.modes_per_axis = 4;
  cfg.ensemble_size = 1;
  const EigenSystem basis(1, 4);
  const SpectralField X0(basis);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 4, 1.0, 2.0, 0.0);
  const int paths = 3000;
  EnsembleData e;
  e.dim = 1;
  e.modes_per_axis = 4;
  e.horizon = 1.0;
  e.master_seed = 61;
  e.times = {0.0, 0.5, 1.0};
  e.attempted_paths = paths;
  for (int p = 0; p < paths; ++p) {
    const WienerPath W = sample_wiener_increments(spec, 8, 1.0, 61, p);
    const SolutionPath path = ou_exact_solve(cfg, X0, W, spec);
    std::vector<double> row(3 * 4);
    for (std::size_t i = 0; i < 3; ++i) {
      const int m = static_cast<int>(i) * 4;
      for (int k = 0; k < 4; ++k) row[i * 4 + k] = path.snapshots[m][k];
    }
    e.path_ids.push_back(static_cast<std::uint64_t>(p));
    e.coefficients.push_back(std::move(row));
  }
  const MomentReport rep = moment_bound_check(e, 4.0, 0.0, X0, 2.0, 64);
  double sv = 0.0, sv2 = 0.0;
  for (int k = 0; k < 4; ++k) {
    const double lam = basis.lambda(k);
    const double v = spec.eigenvalue(k) * (1.0 - std::exp(-2.0 * lam)) / (2.0 * lam);
    sv += v;
    sv2 += v * v;
  }
  const double exact = sv * sv + 2.0 * sv2;
  CHECK(rep.pass);
  CHECK(rep.sup_moment == doctest::Approx(exact).epsilon(0.15)); // ~4 SE at 3000 paths
}
