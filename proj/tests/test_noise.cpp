#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <cstdio>
#include <filesystem>

#include "shesim/field.hpp"
#include "shesim/noise.hpp"
#include "shesim/norms.hpp"

using namespace shesim;

TEST_CASE("cq partial sum uses the grid Hoelder norm of each eigenfunction") {
  // single-mode law: the partial sum is sqrt(lamQ) ||h_n||_{C^eps}
  for (const int n : {1, 3, 7}) {
    std::vector<double> vals(static_cast<std::size_t>(n), 0.0);
    vals.back() = 0.49;
    const NoiseSpec spec = NoiseSpec::from_list(1, n, vals, 0.6);
    const double got = check_cq_condition(spec).partial_sum;
    EigenSystem basis(1, n);
    SpectralField x(basis);
    x[n - 1] = 1.0;
    const double expect = 0.7 * holder_norm(synthesize(x, std::max(511, 32 * n)), 0.6);
    CHECK(got == doctest::Approx(expect).epsilon(1e-2));
  }
}

TEST_CASE("cq condition: convergent, divergent, and zero laws") {
  // r = 3 (lambda = n^-6), eps = 1: summand ~ sqrt(2) pi n^-2, converges
  const NoiseSpec good = NoiseSpec::parametric_law(1, 64, 1.0, 3.0, 1.0);
  const CqReport repg = check_cq_condition(good);
  CHECK(repg.converged == CqReport::Converged::yes);
  CHECK(repg.partial_sum > 0.0);
  CHECK(repg.tail_bound < 0.01 * repg.partial_sum);

  // lambda = n^-1, eps = 1: summand ~ n^{1/2}, diverges
  const NoiseSpec bad = NoiseSpec::parametric_law(1, 64, 1.0, 0.5, 1.0);
  const CqReport repb = check_cq_condition(bad);
  CHECK(repb.converged == CqReport::Converged::no);

  // lambda = n^-4, eps = 1: summand ~ n^-1, harmonic divergence
  const NoiseSpec marginal = NoiseSpec::parametric_law(1, 64, 1.0, 2.0, 1.0);
  CHECK(check_cq_condition(marginal).converged == CqReport::Converged::no);
  // the same decay at eps = 0 converges (tail exponent -2)
  const NoiseSpec eps0 = NoiseSpec::parametric_law(1, 64, 1.0, 2.0, 0.0);
  CHECK(check_cq_condition(eps0).converged == CqReport::Converged::yes);

  // all-zero law
  const NoiseSpec zero = NoiseSpec::from_list(1, 8, std::vector<double>(8, 0.0), 1.0);
  const CqReport repz = check_cq_condition(zero);
  CHECK(repz.partial_sum == 0.0);
  CHECK(repz.converged == CqReport::Converged::yes);
}

TEST_CASE("cq partial sums are monotone in the truncation and stabilise for a convergent law") {
  // partial sums of a convergent-by-comparison series settle within 1%
  const NoiseSpec fine = NoiseSpec::parametric_law(1, 1000, 1.0, 3.0, 1.0);
  const NoiseSpec finer = NoiseSpec::parametric_law(1, 4000, 1.0, 3.0, 1.0);
  const double s1 = check_cq_condition(fine).partial_sum;
  const double s2 = check_cq_condition(finer).partial_sum;
  CHECK(s2 >= s1);
  CHECK(std::abs(s2 - s1) / s2 < 0.01);
}

TEST_CASE("explicit lists are finite-rank laws: converged with zero tail") {
  NoiseSpec list = NoiseSpec::from_list(1, 4, {1.0, 0.5, 0.25, 0.125}, 0.5);
  const CqReport rep = check_cq_condition(list);
  CHECK(rep.tail_bound == 0.0);
  CHECK(rep.converged == CqReport::Converged::yes);
  list.truncated_view = true;
  CHECK(check_cq_condition(list).converged == CqReport::Converged::unknown);
  CHECK(list.eigenvalue(10) == 0.0); // beyond the list
}

TEST_CASE("sampling is bit-reproducible and respects N(0, dt)") {
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 8, 1.0, 2.0, 0.0);
  const WienerPath a = sample_wiener_increments(spec, 64, 2.0, 99, 5);
  const WienerPath b = sample_wiener_increments(spec, 64, 2.0, 99, 5);
  CHECK(a.increments == b.increments);
  const WienerPath c = sample_wiener_increments(spec, 64, 2.0, 99, 6);
  CHECK(a.increments != c.increments);

  // empirical variance across a 2000-path ensemble within 5 SE of dt
  const int paths = 2000;
  double s2 = 0.0;
  for (int p = 0; p < paths; ++p) {
    const WienerPath w = sample_wiener_increments(spec, 4, 2.0, 7, p);
    s2 += w.increment(0, 0) * w.increment(0, 0);
  }
  const double dt = 0.5;
  const double se = dt * std::sqrt(2.0 / paths);
  CHECK(std::abs(s2 / paths - dt) < 5.0 * se);
}

TEST_CASE("covariance identity: E[W(s)g W(t)h] = (s^t) lamQ delta_gh") {
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 4, 1.0, 2.0, 0.0);
  const int paths = 4000;
  const int M = 8;
  const double T = 1.0;
  double c11 = 0.0, c12 = 0.0;
  const int ms = 4, mt = 8; // s = 0.5, t = 1.0
  for (int p = 0; p < paths; ++p) {
    const WienerPath w = sample_wiener_increments(spec, M, T, 13, p);
    double w1s = 0.0, w1t = 0.0, w2t = 0.0;
    for (int m = 0; m < ms; ++m) w1s += w.increment(m, 0);
    for (int m = 0; m < mt; ++m) {
      w1t += w.increment(m, 0);
      w2t += w.increment(m, 1);
    }
    // scale by sqrt(lambda^Q) to form W h_n pairings
    const double l1 = std::sqrt(spec.eigenvalue(0)), l2 = std::sqrt(spec.eigenvalue(1));
    c11 += (l1 * w1s) * (l1 * w1t);
    c12 += (l1 * w1s) * (l2 * w2t);
  }
  c11 /= paths;
  c12 /= paths;
  const double expect = 0.5 * spec.eigenvalue(0); // (s ^ t) lamQ_1
  CHECK(std::abs(c11 - expect) < 5.0 * expect * std::sqrt(3.0 / paths));
  CHECK(std::abs(c12) < 4.0 * std::sqrt(0.5 * spec.eigenvalue(0) * 1.0 * spec.eigenvalue(1) / paths));
}

TEST_CASE("independence across path ids") {
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 1, 1.0, 1.0, 0.0);
  const int paths = 4000;
  double cross = 0.0;
  for (int p = 0; p < paths; ++p) {
    const WienerPath a = sample_wiener_increments(spec, 1, 1.0, 31, 2 * p);
    const WienerPath b = sample_wiener_increments(spec, 1, 1.0, 31, 2 * p + 1);
    cross += a.increment(0, 0) * b.increment(0, 0);
  }
  CHECK(std::abs(cross / paths) < 4.0 / std::sqrt(double(paths)));
}

TEST_CASE("trace is non-decreasing in the truncation with small deficit for n^-4") {
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 64, 1.0, 2.0, 0.0);
  double prev = 0.0;
  for (const int n : {8, 16, 32, 64}) {
    const double tr = spec.trace(n);
    CHECK(tr >= prev);
    prev = tr;
  }
  const double zeta4 = 1.0823232337111382; // sum n^-4
  CHECK((zeta4 - prev) / zeta4 < 1e-3);
}

TEST_CASE("refinement: bridge constraint, variance, aggregation identity") {
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 4, 1.0, 2.0, 0.0);
  const WienerPath coarse = sample_wiener_increments(spec, 16, 1.0, 77, 3);
  CHECK_THROWS_AS(refine_path(coarse, 3), std::invalid_argument);

  const WienerPath fine = refine_path(coarse, 4);
  CHECK(fine.steps == 64);
  for (int m = 0; m < 16; ++m) {
    for (int n = 0; n < 4; ++n) {
      double s = 0.0;
      for (int j = 0; j < 4; ++j) s += fine.increment(4 * m + j, n);
      CHECK(s == doctest::Approx(coarse.increment(m, n)).epsilon(1e-14));
    }
  }

  // refine(W, 4) nests refine(refine(W, 2), 2) exactly
  const WienerPath two = refine_path(refine_path(coarse, 2), 2);
  for (std::size_t i = 0; i < two.increments.size(); ++i)
    CHECK(two.increments[i] == fine.increments[i]);

  // refined variance = dt / factor within 5 SE over an ensemble
  const int paths = 2000;
  double s2 = 0.0;
  for (int p = 0; p < paths; ++p) {
    const WienerPath w = refine_path(sample_wiener_increments(spec, 4, 1.0, 123, p), 2);
    s2 += w.increment(0, 0) * w.increment(0, 0);
  }
  const double expect = 0.125; // dt/2 = (1/4)/2
  CHECK(std::abs(s2 / paths - expect) < 5.0 * expect * std::sqrt(2.0 / paths));
}

TEST_CASE("binary dump round-trips") {
  const NoiseSpec spec = NoiseSpec::parametric_law(1, 4, 1.0, 2.0, 0.0);
  const WienerPath w = sample_wiener_increments(spec, 8, 0.5, 42, 9);
  const auto file = std::filesystem::temp_directory_path() / "shesim_wiener_test.bin";
  dump_wiener(w, file);
  const WienerPath r = load_wiener(file);
  CHECK(r.master_seed == w.master_seed);
  CHECK(r.path_id == w.path_id);
  CHECK(r.steps == w.steps);
  CHECK(r.modes_per_axis == w.modes_per_axis);
  CHECK(r.horizon == w.horizon);
  CHECK(r.increments == w.increments);
  std::filesystem::remove(file);
}
