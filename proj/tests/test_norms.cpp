#include "doctest.h"

#include <cmath>
#include <stdexcept>

#include "shesim/field.hpp"
#include "shesim/norms.hpp"
#include "shesim/rng.hpp"

using namespace shesim;

namespace {

constexpr double kPi = 3.14159265358979323846;

GridField constant_grid(int ng, double c) {
  GridField u(1, ng);
  for (auto& v : u.values) v = c;
  return u;
}

SpectralField random_field(const EigenSystem& basis, std::uint64_t seed, double decay = 0.0) {
  SpectralField x(basis);
  for (int k = 0; k < basis.mode_count(); ++k)
    x[k] = rng::normal(seed, rng::kInit, 1, static_cast<std::uint32_t>(k), 0) *
           std::pow(basis.mode_norm_sq(k), -decay / 2.0);
  return x;
}

} // namespace

TEST_CASE("lq_norm: constant field approaches |c| as the grid refines") {
  // h^d * n_g = n_g/(n_g+1) -> 1
  const GridField u = constant_grid(511, -3.0);
  for (const double q : {2.0, 4.0, 6.0, 8.0}) {
    CHECK(lq_norm(u, q) == doctest::Approx(3.0).epsilon(0.02));
  }
  CHECK_THROWS_AS(lq_norm(u, 1.5), std::invalid_argument);
}

TEST_CASE("lq_norm of the first eigenfunction: q = 2 and q = 4 closed forms") {
  EigenSystem basis(1, 1);
  SpectralField x(basis);
  x[0] = 1.0;
  const GridField u = synthesize(x, 511);
  CHECK(lq_norm(u, 2.0) == doctest::Approx(1.0).epsilon(1e-6));
  // (int_0^1 4 sin^4(pi s) ds)^{1/4} = (3/2)^{1/4}
  CHECK(lq_norm(u, 4.0) == doctest::Approx(std::pow(1.5, 0.25)).epsilon(1e-4));
  CHECK(std::pow(1.5, 0.25) == doctest::Approx(1.10668).epsilon(1e-4));
}

TEST_CASE("lq_norm: non-even q falls back to pow and stays consistent") {
  EigenSystem basis(1, 4);
  const SpectralField x = random_field(basis, 3);
  const GridField u = synthesize(x, 127);
  // q = 4 via the even fast path vs q = 4.0000001 via pow
  CHECK(lq_norm(u, 4.0) == doctest::Approx(lq_norm(u, 4.0000001)).epsilon(1e-5));
}

TEST_CASE("etheta_norm: single mode gives pi^theta; theta = 0 reduces to lq_norm") {
  EigenSystem basis(1, 4);
  SpectralField x(basis);
  x[0] = 1.0;
  for (const double theta : {0.3, 1.0, 1.7})
    CHECK(etheta_norm(x, theta, 2.0, 511) == doctest::Approx(std::pow(kPi, theta)).epsilon(1e-6));

  const SpectralField y = random_field(basis, 9);
  CHECK(etheta_norm(y, 0.0, 2.0, 511) == doctest::Approx(lq_norm(synthesize(y, 511), 2.0)));
  CHECK_THROWS_AS(etheta_norm(y, -0.5, 2.0, 64), std::invalid_argument);
}

TEST_CASE("etheta_norm at q = 2 matches the Parseval formula to 1e-8") {
  EigenSystem basis(1, 16);
  const SpectralField x = random_field(basis, 21);
  const double viaGrid = etheta_norm(x, 1.0, 2.0, 256);
  double parseval = 0.0;
  for (int k = 0; k < 16; ++k) parseval += basis.lambda(k) * x[k] * x[k];
  CHECK(viaGrid == doctest::Approx(std::sqrt(parseval)).epsilon(1e-8));
}

TEST_CASE("slobodeckij_norm: constant field has zero seminorm") {
  const GridField u = constant_grid(63, 2.5);
  CHECK(slobodeckij_norm(u, 0.5, 2.0) == doctest::Approx(lq_norm(u, 2.0)).epsilon(1e-12));
  CHECK_THROWS_AS(slobodeckij_norm(u, 0.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(slobodeckij_norm(u, 1.0, 2.0), std::invalid_argument);
}

TEST_CASE("slobodeckij_norm of h_1 is grid-stable and matches a dense oracle") {
  EigenSystem basis(1, 1);
  SpectralField x(basis);
  x[0] = 1.0;
  const double n255 = slobodeckij_norm(synthesize(x, 255), 0.5, 2.0);
  const double n511 = slobodeckij_norm(synthesize(x, 511), 0.5, 2.0);
  const double oracle = slobodeckij_norm(synthesize(x, 2047), 0.5, 2.0);
  CHECK(std::abs(n511 - n255) / oracle < 0.03);
  CHECK(std::abs(n511 - oracle) / oracle < 0.03);
}

TEST_CASE("slobodeckij_norm grows in theta for a jump discontinuity") {
  GridField u(1, 255);
  for (int j = 0; j < 255; ++j) u.values[j] = u.coord(j) < 0.5 ? -1.0 : 1.0;
  double prev = 0.0;
  for (const double theta : {0.5, 0.7, 0.9}) {
    const double n = slobodeckij_norm(u, theta, 2.0);
    CHECK(n > prev);
    prev = n;
  }
}

TEST_CASE("slobodeckij and etheta norms stay equivalent across refinement") {
  EigenSystem basis(1, 8);
  const SpectralField x = random_field(basis, 33, 1.0);
  const double theta = 0.4;
  const double ratio255 = slobodeckij_norm(synthesize(x, 255), theta, 2.0) /
                          etheta_norm(x, theta, 2.0, 255);
  const double ratio511 = slobodeckij_norm(synthesize(x, 511), theta, 2.0) /
                          etheta_norm(x, theta, 2.0, 511);
  CHECK(std::abs(ratio511 / ratio255 - 1.0) < 0.05);
}

TEST_CASE("holder_norm: constants, homogeneity, eps = 0 sup norm") {
  const GridField u = constant_grid(63, -1.5);
  for (const double eps : {0.0, 0.5, 1.0}) CHECK(holder_norm(u, eps) == doctest::Approx(1.5));

  EigenSystem basis(1, 4);
  const SpectralField x = random_field(basis, 14);
  const GridField g = synthesize(x, 127);
  GridField g3 = g;
  for (auto& v : g3.values) v *= -3.0;
  CHECK(holder_norm(g3, 0.7) == doctest::Approx(3.0 * holder_norm(g, 0.7)).epsilon(1e-12));
  CHECK_THROWS_AS(holder_norm(g, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(holder_norm(g, -0.1), std::invalid_argument);
}

TEST_CASE("holder_norm of h_1 at eps = 1: sup + Lipschitz constant") {
  EigenSystem basis(1, 1);
  SpectralField x(basis);
  x[0] = 1.0;
  const GridField u = synthesize(x, 511);
  const double expected = std::sqrt(2.0) + std::sqrt(2.0) * kPi;
  CHECK(holder_norm(u, 1.0) == doctest::Approx(expected).epsilon(0.02));
}
