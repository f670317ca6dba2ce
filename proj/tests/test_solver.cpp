#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "shesim/norms.hpp"
#include "shesim/rng.hpp"
#include "shesim/solver.hpp"

using namespace shesim;

namespace {

constexpr double kPi = 3.14159265358979323846;

SimConfig small_config(int modes = 8, int steps = 64, double T = 0.5) {
  SimConfig cfg;
  cfg.horizon = T;
  cfg.steps = steps;
  cfg.modes_per_axis = modes;
  cfg.q = 2.0;
  cfg.p = 4.0;
  cfg.alpha = 0.3;
  cfg.ensemble_size = 1;
  cfg.master_seed = 7;
  return cfg;
}

SpectralField random_state(const EigenSystem& basis, std::uint64_t seed) {
  SpectralField x(basis);
  for (int k = 0; k < basis.mode_count(); ++k)
    x[k] = rng::normal(seed, rng::kInit, 6, static_cast<std::uint32_t>(k), 0) / (k + 1.0);
  return x;
}

double coeff_l2(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

} // namespace

TEST_CASE("config validation pins the alpha window and exponents") {
  SimConfig cfg = small_config();
  CHECK(cfg.validate().empty());
  cfg.alpha = 0.6;
  auto bad = cfg.validate();
  REQUIRE(bad.size() == 1);
  CHECK(bad[0].find("(1/p, 1/2)") != std::string::npos);
  cfg.alpha = 0.2; // 1/p = 0.25
  CHECK(cfg.validate().size() == 1);
  cfg.alpha = 0.3;
  cfg.q = 1.0;
  cfg.p = 2.0; // q, p, and the now-empty alpha window all fail
  CHECK(cfg.validate().size() == 3);
}

TEST_CASE("exp euler with f = g = 0 is the exact semigroup flow to 1e-12") {
  const SimConfig cfg = small_config();
  const EigenSystem basis(1, 8);
  const SpectralField X0 = random_state(basis, 1);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 8, 1.0, 2.0, 0.0);
  const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 7, 0);
  const SolutionPath path =
      exp_euler_solve(cfg, X0, W, spec, ScalarFn::zero(), ScalarFn::zero());
  REQUIRE(static_cast<int>(path.snapshots.size()) == cfg.steps + 1);
  for (const int m : {1, 13, 64}) {
    const SpectralField ref = apply_semigroup(X0, path.times[m]);
    for (int k = 0; k < 8; ++k)
      CHECK(path.snapshots[m][k] == doctest::Approx(ref[k]).epsilon(1e-12));
  }
}

TEST_CASE("exp euler with linear drift on one mode tracks the scalar ODE at O(dt)") {
  // dX = (-lambda + a) X dt: exponential Euler gives e^{-lambda dt}(1 + a dt)
  // per step, an O(dt) approximation of e^{(-lambda + a) t}
  SimConfig cfg = small_config(1, 512, 0.25);
  const EigenSystem basis(1, 1);
  SpectralField X0(basis);
  X0[0] = 1.0;
  const NoiseSpec spec = NoiseSpec::from_list(1, 1, {0.0}, 0.0);
  const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 3, 0);
  const double a = 2.0;
  const SolutionPath path =
      exp_euler_solve(cfg, X0, W, spec, ScalarFn::linear(a, 0.0), ScalarFn::zero());
  const double exact = std::exp((-basis.lambda(0) + a) * cfg.horizon);
  const double got = path.snapshots.back()[0];
  CHECK(std::abs(got - exact) < 10.0 * cfg.dt());

  SimConfig cfg2 = cfg;
  cfg2.steps = 1024;
  const WienerPath W2 = sample_wiener_increments(spec, cfg2.steps, cfg2.horizon, 3, 0);
  const double got2 =
      exp_euler_solve(cfg2, X0, W2, spec, ScalarFn::linear(a, 0.0), ScalarFn::zero())
          .snapshots.back()[0];
  CHECK(std::abs(got2 - exact) < 0.6 * std::abs(got - exact)); // ~halves with dt
}

TEST_CASE("adaptedness: perturbing a late increment leaves earlier snapshots bit-exact") {
  const SimConfig cfg = small_config(4, 32, 0.25);
  const EigenSystem basis(1, 4);
  const SpectralField X0 = random_state(basis, 2);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 4, 1.0, 1.0, 0.0);
  WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 11, 0);
  const ScalarFn f = ScalarFn::scaled_sine(0.5);
  const ScalarFn g = ScalarFn::sine_offset(0.3, 1.0);
  const SolutionPath base = exp_euler_solve(cfg, X0, W, spec, f, g);

  const int mstar = 20;
  W.increments[static_cast<std::size_t>(mstar) * 4 + 2] += 0.37;
  const SolutionPath bumped = exp_euler_solve(cfg, X0, W, spec, f, g);
  for (int m = 0; m <= mstar; ++m)
    for (int k = 0; k < 4; ++k)
      CHECK(bumped.snapshots[m][k] == base.snapshots[m][k]);
  CHECK(bumped.snapshots[mstar + 1].coeffs != base.snapshots[mstar + 1].coeffs);
}

TEST_CASE("determinism: identical config and seed give identical paths") {
  const SimConfig cfg = small_config(4, 32, 0.25);
  const EigenSystem basis(1, 4);
  const SpectralField X0 = random_state(basis, 2);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 4, 1.0, 1.0, 0.0);
  const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 11, 5);
  const ScalarFn f = ScalarFn::scaled_sine(0.5);
  const ScalarFn g = ScalarFn::sine_offset(0.3, 1.0);
  const SolutionPath a = exp_euler_solve(cfg, X0, W, spec, f, g);
  const SolutionPath b = exp_euler_solve(cfg, X0, W, spec, f, g);
  for (int m = 0; m <= 32; ++m) CHECK(a.snapshots[m].coeffs == b.snapshots[m].coeffs);
}

TEST_CASE("constant-diffusion fast path equals the pseudo-spectral evaluation") {
  // g = 1 via the mode-space shortcut vs a two-knot table forcing the grid
  // roundtrip: identical up to transform accuracy
  const SimConfig cfg = small_config(8, 16, 0.125);
  const EigenSystem basis(1, 8);
  const SpectralField X0 = random_state(basis, 3);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 8, 1.0, 2.0, 0.0);
  const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 17, 0);
  const SolutionPath fast =
      exp_euler_solve(cfg, X0, W, spec, ScalarFn::zero(), ScalarFn::constant(1.0));
  const SolutionPath slow = exp_euler_solve(cfg, X0, W, spec, ScalarFn::zero(),
                                            ScalarFn::table({-1e9, 1e9}, {1.0, 1.0}));
  for (int m = 0; m <= 16; ++m)
    for (int k = 0; k < 8; ++k)
      CHECK(fast.snapshots[m][k] == doctest::Approx(slow.snapshots[m][k]).epsilon(1e-11));
}

TEST_CASE("blowup sentinel aborts with step and mode diagnostics") {
  SimConfig cfg = small_config(2, 64, 4.0);
  const EigenSystem basis(1, 2);
  SpectralField X0(basis);
  X0[0] = 1.0;
  const NoiseSpec spec = NoiseSpec::from_list(1, 2, {0.0, 0.0}, 0.0);
  const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 5, 0);
  bool thrown = false;
  try {
    exp_euler_solve(cfg, X0, W, spec, ScalarFn::linear(400.0, 0.0), ScalarFn::zero());
  } catch (const SolverBlowupError& e) {
    thrown = true;
    CHECK(e.step() > 0);
    CHECK(e.mode() == 0);
    CHECK(std::abs(e.value()) >= 1e12);
  }
  CHECK(thrown);
}

TEST_CASE("ou exact: terminal variances match the closed form within 4 SE") {
  SimConfig cfg = small_config(4, 16, 1.0);
  const EigenSystem basis(1, 4);
  const SpectralField X0(basis);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 4, 1.0, 2.0, 0.0);
  const int paths = 4000;
  std::vector<double> s2(4, 0.0);
  for (int p = 0; p < paths; ++p) {
    const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 21, p);
    const SolutionPath path = ou_exact_solve(cfg, X0, W, spec);
    for (int k = 0; k < 4; ++k) {
      const double v = path.snapshots.back()[k];
      s2[k] += v * v;
    }
  }
  for (int k = 0; k < 4; ++k) {
    const double lam = basis.lambda(k);
    const double exact =
        spec.eigenvalue(k) * (1.0 - std::exp(-2.0 * lam * cfg.horizon)) / (2.0 * lam);
    const double se = exact * std::sqrt(2.0 / paths);
    CHECK(std::abs(s2[k] / paths - exact) < 4.0 * se);
  }
}

TEST_CASE("ou exact: zero eigenvalue decays deterministically; stationary limit") {
  SimConfig cfg = small_config(2, 8, 0.5);
  const EigenSystem basis(1, 2);
  SpectralField X0(basis);
  X0[0] = 2.0;
  X0[1] = -1.0;
  const NoiseSpec spec = NoiseSpec::from_list(1, 2, {0.0, 1.0}, 0.0);
  const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 23, 0);
  const SolutionPath path = ou_exact_solve(cfg, X0, W, spec);
  CHECK(path.snapshots.back()[0] ==
        doctest::Approx(2.0 * std::exp(-basis.lambda(0) * 0.5)).epsilon(1e-12));

  const double lam = basis.lambda(1);
  const double v_inf = 1.0 / (2.0 * lam);
  const double v_T = (1.0 - std::exp(-2.0 * lam * 10.0)) / (2.0 * lam);
  CHECK(v_T == doctest::Approx(v_inf).epsilon(1e-12));
}

TEST_CASE("deterministic convolution: zero drift, mode-1 closed form, quadrature order") {
  SimConfig cfg = small_config(16, 128, 1.0);
  const EigenSystem basis(1, 16);
  SpectralField X0(basis);
  const NoiseSpec spec = NoiseSpec::from_list(1, 16, std::vector<double>(16, 0.0), 0.0);
  const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 2, 0);
  SolutionPath path = exp_euler_solve(cfg, X0, W, spec, ScalarFn::zero(), ScalarFn::zero());

  for (const auto& c : deterministic_convolution(path, ScalarFn::zero()))
    for (const double v : c.coeffs) CHECK(v == 0.0);

  // constant forcing F = 1: mode-1 coefficient tends to b_1 (1-e^{-lam t})/lam
  const ScalarFn f = ScalarFn::constant(1.0);
  const auto conv_exact = deterministic_convolution(path, f, ConvolutionRule::exactCell);
  const auto conv_left = deterministic_convolution(path, f, ConvolutionRule::leftPoint);
  const double lam = basis.lambda(0);
  const double b1 = 2.0 * std::sqrt(2.0) / kPi; // first sine coefficient of 1
  const double expect = b1 * (1.0 - std::exp(-lam * 1.0)) / lam;
  CHECK(conv_exact.back()[0] == doctest::Approx(expect).epsilon(1e-3));

  const double err128 = std::abs(conv_left.back()[0] - conv_exact.back()[0]);
  SimConfig cfg2 = cfg;
  cfg2.steps = 256;
  const WienerPath W2 = sample_wiener_increments(spec, cfg2.steps, cfg2.horizon, 2, 0);
  SolutionPath path2 = exp_euler_solve(cfg2, X0, W2, spec, ScalarFn::zero(), ScalarFn::zero());
  const double err256 =
      std::abs(deterministic_convolution(path2, f).back()[0] -
               deterministic_convolution(path2, f, ConvolutionRule::exactCell).back()[0]);
  CHECK(err256 < 0.65 * err128); // first-order gap between the two rules
}

TEST_CASE("stochastic convolution: zero diffusion and the single-increment formula") {
  const EigenSystem basis(1, 2);
  const SpectralField X0 = random_state(basis, 4);
  const NoiseSpec spec = NoiseSpec::from_list(1, 2, {1.0, 0.25}, 0.0);
  const WienerPath W = sample_wiener_increments(spec, 1, 0.25, 31, 0);
  SolutionPath path;
  path.times = {0.0, 0.25};
  path.snapshots = {X0, X0};

  for (const auto& c : stochastic_convolution_direct(path, ScalarFn::zero(), W, spec))
    for (const double v : c.coeffs) CHECK(v == 0.0);

  // M = 1, additive g: value at t_1 is S(dt) G dW_0 per the left-point sum
  const auto conv = stochastic_convolution_direct(path, ScalarFn::constant(1.0), W, spec);
  for (int k = 0; k < 2; ++k) {
    const double expect = std::exp(-basis.lambda(k) * 0.25) * std::sqrt(spec.eigenvalue(k)) *
                          W.increment(0, k);
    CHECK(conv.back()[k] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("direct stochastic convolution reproduces the discrete OU law") {
  SimConfig cfg = small_config(2, 64, 0.5);
  const EigenSystem basis(1, 2);
  const SpectralField X0(basis);
  const NoiseSpec spec = NoiseSpec::from_list(1, 2, {1.0, 0.5}, 0.0);
  const int paths = 3000;
  std::vector<double> s2(2, 0.0);
  SolutionPath path;
  path.times.resize(65);
  for (int m = 0; m <= 64; ++m) path.times[m] = cfg.horizon * m / 64;
  path.snapshots.assign(65, X0);
  for (int p = 0; p < paths; ++p) {
    const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 41, p);
    const auto conv = stochastic_convolution_direct(path, ScalarFn::constant(1.0), W, spec);
    for (int k = 0; k < 2; ++k) s2[k] += conv.back()[k] * conv.back()[k];
  }
  // discrete-sum variance: lamQ dt e^{-2 lam dt} (1-e^{-2 lam T})/(1-e^{-2 lam dt})
  for (int k = 0; k < 2; ++k) {
    const double lam = basis.lambda(k);
    const double e = std::exp(-2.0 * lam * cfg.dt());
    const double exact = spec.eigenvalue(k) * cfg.dt() * e *
                         (1.0 - std::exp(-2.0 * lam * cfg.horizon)) / (1.0 - e);
    const double se = exact * std::sqrt(2.0 / paths);
    CHECK(std::abs(s2[k] / paths - exact) < 4.0 * se);
  }
}

TEST_CASE("r_alpha: telescoping with the kernel only gives t^alpha / alpha") {
  const int M = 64;
  const double dt = 1.0 / M;
  const double alpha = 0.4;
  std::vector<std::vector<double>> ones(M + 1, std::vector<double>(1, 1.0));
  const double lam0[1] = {0.0};
  const auto out = r_alpha_apply_modes(ones, {lam0, 1}, dt, alpha);
  for (const int m : {1, 7, 32, 64}) {
    const double t = m * dt;
    CHECK(out[m][0] == doctest::Approx(std::pow(t, alpha) / alpha).epsilon(1e-12));
  }
  CHECK_THROWS_AS(r_alpha_apply_modes(ones, {lam0, 1}, dt, 1.2), std::invalid_argument);
}

TEST_CASE("r_alpha at alpha -> 1 reduces to the plain left-point convolution") {
  const int M = 32;
  const double dt = 0.5 / M;
  std::vector<std::vector<double>> vals(M + 1, std::vector<double>(1));
  for (int m = 0; m <= M; ++m) vals[m][0] = std::cos(2.0 * m * dt);
  const double lam[1] = {3.7};
  const auto near1 = r_alpha_apply_modes(vals, {lam, 1}, dt, 0.9999999);
  for (const int m : {8, 32}) {
    double ref = 0.0;
    for (int j = 0; j < m; ++j) ref += dt * std::exp(-lam[0] * (m - j) * dt) * vals[j][0];
    CHECK(near1[m][0] == doctest::Approx(ref).epsilon(1e-4));
  }
}

TEST_CASE("r_alpha with semigroup matches a dense reference quadrature to 0.1%") {
  // f = 1 on the first mode, alpha = 0.4, lambda = pi^2, t = 1; the grid is
  // fine enough that the left-point semigroup factor (error ~ lambda dt / 2)
  // sits inside the tolerance
  const int M = 8192;
  const double dt = 1.0 / M;
  const double alpha = 0.4;
  const double lam_v = kPi * kPi;
  std::vector<std::vector<double>> ones(M + 1, std::vector<double>(1, 1.0));
  const double lams[1] = {lam_v};
  const auto out = r_alpha_apply_modes(ones, {lams, 1}, dt, alpha);

  // 10^6-cell reference with the singular factor integrated exactly per cell
  const int n = 1000000;
  double ref = 0.0;
  for (int i = 0; i < n; ++i) {
    const double s0 = static_cast<double>(i) / n, s1 = static_cast<double>(i + 1) / n;
    const double w = (std::pow(s1, alpha) - std::pow(s0, alpha)) / alpha;
    ref += w * std::exp(-lam_v * 0.5 * (s0 + s1));
  }
  CHECK(out[M][0] == doctest::Approx(ref).epsilon(1e-3));
}

TEST_CASE("factorized convolution: zero diffusion, alpha guard, scalar Beta identity") {
  const EigenSystem basis(1, 1);
  const SpectralField X0(basis);
  const NoiseSpec spec = NoiseSpec::from_list(1, 1, {1.0}, 0.0);
  const WienerPath W = sample_wiener_increments(spec, 16, 1.0, 3, 0);
  SolutionPath tiny;
  tiny.times = {0.0, 0.5, 1.0};
  tiny.snapshots.assign(3, X0);
  for (const auto& c : stochastic_convolution_factorized(tiny, ScalarFn::zero(), W, spec, 0.4))
    for (const double v : c.coeffs) CHECK(v == 0.0);
  CHECK_THROWS_AS(stochastic_convolution_factorized(tiny, ScalarFn::constant(1.0), W, spec, 0.6),
                  std::invalid_argument);

  const int M = 4096;
  const double dt = 1.0 / M;
  for (const double a : {0.3, 0.4}) {
    std::vector<double> w(M + 1, 0.0), v(M + 1, 0.0);
    for (int l = 1; l <= M; ++l) {
      w[l] = (std::pow(l * dt, a) - std::pow((l - 1) * dt, a)) / a;
      v[l] = (std::pow(l * dt, 1.0 - a) - std::pow((l - 1) * dt, 1.0 - a)) / ((1.0 - a) * dt);
    }
    const int i = M / 2;
    double c = 0.0;
    for (int j = i + 1; j < M; ++j) c += w[M - j] * v[j - i];
    c *= std::sin(kPi * a) / kPi;
    CHECK(std::abs(c - 1.0) < 1e-3);
  }
}

TEST_CASE("factorized vs direct convolution converge together as M grows") {
  const EigenSystem basis(1, 4);
  const SpectralField X0(basis);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 4, 1.0, 2.0, 0.0);
  auto rel_at = [&](int M) {
    SolutionPath path;
    path.times.resize(static_cast<std::size_t>(M) + 1);
    for (int m = 0; m <= M; ++m) path.times[m] = 0.25 * m / M;
    path.snapshots.assign(static_cast<std::size_t>(M) + 1, X0);
    double num = 0.0, den = 0.0;
    for (int p = 0; p < 16; ++p) {
      const WienerPath W = sample_wiener_increments(spec, M, 0.25, 47, p);
      const auto direct = stochastic_convolution_direct(path, ScalarFn::constant(1.0), W, spec);
      const auto fact =
          stochastic_convolution_factorized(path, ScalarFn::constant(1.0), W, spec, 0.4);
      num += std::pow(coeff_l2(fact.back().coeffs, direct.back().coeffs), 2);
      double d = 0.0;
      for (const double v : direct.back().coeffs) d += v * v;
      den += d;
    }
    return std::sqrt(num / den);
  };
  const double r512 = rel_at(512);
  const double r1024 = rel_at(1024);
  CHECK(r1024 < r512);
  CHECK(r1024 < 0.10);
}

TEST_CASE("contraction factor: closed form, monotonicity, bisection") {
  CHECK(contraction_factor(1.0, 2.0, 0.0, 3.0) ==
        doctest::Approx(2.0 * (1.0 - std::exp(-3.0))).epsilon(1e-12));
  CHECK_THROWS_AS(contraction_factor(0.0, 1.0, 1.0, 1.0), std::invalid_argument);

  double prev = contraction_factor(0.5, 1.0, 1.0, 2.0);
  for (const double u : {1.0, 2.0, 4.0, 8.0}) {
    const double cur = contraction_factor(u, 1.0, 1.0, 2.0);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(contraction_factor(1e4, 1.0, 1.0, 2.0) < 1e-2 * contraction_factor(1.0, 1.0, 1.0, 2.0));

  const double u_star = contraction_weight_for(1.0, 1.0, 2.0, 0.5);
  CHECK(contraction_factor(u_star, 1.0, 1.0, 2.0) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("picard with f = g = 0 converges immediately to the free flow") {
  const SimConfig cfg = small_config(4, 32, 0.25);
  const EigenSystem basis(1, 4);
  const SpectralField X0 = random_state(basis, 9);
  const NoiseSpec spec = NoiseSpec::from_list(1, 4, {0.0, 0.0, 0.0, 0.0}, 0.0);
  const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 3, 0);
  auto [path, report] =
      picard_solve(cfg, X0, W, spec, ScalarFn::zero(), ScalarFn::zero(), 1.0, 2);
  for (const int m : {5, 32}) {
    const SpectralField ref = apply_semigroup(X0, path.times[m]);
    for (int k = 0; k < 4; ++k)
      CHECK(path.snapshots[m][k] == doctest::Approx(ref[k]).epsilon(1e-12));
  }
  CHECK(report.distances[0] == doctest::Approx(0.0).epsilon(1e-14));
  CHECK_FALSE(report.non_contraction_flagged);
}

TEST_CASE("picard fixed point matches exp euler within the contraction tolerance") {
  SimConfig cfg = small_config(8, 128, 0.25);
  const EigenSystem basis(1, 8);
  const SpectralField X0 = random_state(basis, 10);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 8, 1.0, 3.0, 0.0);
  const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 53, 1);
  const ScalarFn f = ScalarFn::scaled_sine(0.5);
  const ScalarFn g = ScalarFn::sine_offset(0.2, 1.0);
  auto [pico, report] = picard_solve(cfg, X0, W, spec, f, g, 8.0, 8);
  const SolutionPath euler = exp_euler_solve(cfg, X0, W, spec, f, g);
  double dist = 0.0, scale = 0.0;
  for (int m = 0; m <= cfg.steps; ++m) {
    dist = std::max(dist, coeff_l2(pico.snapshots[m].coeffs, euler.snapshots[m].coeffs));
    double s = 0.0;
    for (const double v : euler.snapshots[m].coeffs) s += v * v;
    scale = std::max(scale, std::sqrt(s));
  }
  CHECK(dist < 0.05 * scale);
  REQUIRE(report.distances.size() == 8);
  for (std::size_t k = 2; k < 8; ++k)
    CHECK(report.distances[k] <= 0.9 * report.distances[k - 1] + 1e-15);
}

TEST_CASE("refined noise drives the euler scheme toward the ou oracle at order ~1") {
  SimConfig cfg = small_config(8, 64, 1.0);
  const EigenSystem basis(1, 8);
  const SpectralField X0(basis);
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 8, 1.0, 2.0, 0.0);
  const int paths = 400;
  double d2a = 0.0, d2b = 0.0;
  for (int p = 0; p < paths; ++p) {
    const WienerPath W64 = sample_wiener_increments(spec, 64, 1.0, 71, p);
    const WienerPath W256 = refine_path(W64, 4);
    const SolutionPath ea =
        exp_euler_solve(cfg, X0, W64, spec, ScalarFn::zero(), ScalarFn::constant(1.0));
    const SolutionPath oa = ou_exact_solve(cfg, X0, W64, spec);
    SimConfig cfgb = cfg;
    cfgb.steps = 256;
    const SolutionPath eb =
        exp_euler_solve(cfgb, X0, W256, spec, ScalarFn::zero(), ScalarFn::constant(1.0));
    const SolutionPath ob = ou_exact_solve(cfgb, X0, W256, spec);
    d2a += std::pow(coeff_l2(ea.snapshots.back().coeffs, oa.snapshots.back().coeffs), 2);
    d2b += std::pow(coeff_l2(eb.snapshots.back().coeffs, ob.snapshots.back().coeffs), 2);
  }
  const double order = std::log2(std::sqrt(d2a / d2b)) / 2.0; // per halving over 4x
  CHECK(order > 0.8);
  CHECK(order < 1.3);
}

TEST_CASE("solver handles d = 2 fields end to end") {
  SimConfig cfg = small_config(4, 32, 0.25);
  cfg.dim = 2;
  const EigenSystem basis(2, 4);
  SpectralField X0(basis);
  X0[basis.flat_index(1, 1)] = 1.0;
  NoiseSpec spec = NoiseSpec::parametric_law(2, 4, 1.0, 2.0, 0.0);
  const WienerPath W = sample_wiener_increments(spec, cfg.steps, cfg.horizon, 19, 0);
  const SolutionPath path = exp_euler_solve(cfg, X0, W, spec, ScalarFn::scaled_sine(0.5),
                                            ScalarFn::sine_offset(0.2, 1.0));
  CHECK(path.snapshots.size() == 33);
  for (const double v : path.snapshots.back().coeffs) CHECK(std::isfinite(v));

  // pure decay in d = 2
  const SolutionPath free = exp_euler_solve(cfg, X0, W, spec, ScalarFn::zero(), ScalarFn::zero());
  const double lam11 = basis.lambda(basis.flat_index(1, 1));
  CHECK(free.snapshots.back()[basis.flat_index(1, 1)] ==
        doctest::Approx(std::exp(-lam11 * 0.25)).epsilon(1e-12));
}
