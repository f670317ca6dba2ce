#include "shesim/norms.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shesim {

namespace {

bool even_integer(double q, int& out) {
  const double r = std::round(q);
  if (std::abs(q - r) > 1e-12) return false;
  const int qi = static_cast<int>(r);
  if (qi % 2 != 0) return false;
  out = qi;
  return true;
}

// |x|^q for even integer q by repeated squaring
inline double even_pow(double x, int q) {
  double acc = 1.0;
  double base = x * x; // q even: |x|^q = (x^2)^(q/2)
  int e = q / 2;
  while (e > 0) {
    if (e & 1) acc *= base;
    base *= base;
    e >>= 1;
  }
  return acc;
}

inline double abs_pow(double x, double q, bool evenq, int qi) {
  return evenq ? even_pow(x, qi) : std::pow(std::abs(x), q);
}

} // namespace

double lq_norm(const GridField& u, double q) {
  if (q < 2.0)
    throw std::invalid_argument("lq_norm: q must be >= 2, got " + std::to_string(q));
  int qi = 0;
  const bool evenq = even_integer(q, qi);
  double sum = 0.0;
  for (const double v : u.values) sum += abs_pow(v, q, evenq, qi);
  const double h = u.spacing();
  const double hd = u.dim == 1 ? h : h * h;
  return std::pow(hd * sum, 1.0 / q);
}

double etheta_norm(const SpectralField& x, double theta, double q, int grid_points_per_axis) {
  if (theta < 0.0)
    throw std::invalid_argument("etheta_norm: theta must be >= 0");
  const SpectralField y = apply_fractional_power(x, theta / 2.0);
  return lq_norm(synthesize(y, grid_points_per_axis), q);
}

double slobodeckij_norm(const GridField& u, double theta, double q) {
  if (theta <= 0.0 || theta >= 1.0)
    throw std::invalid_argument("slobodeckij_norm: theta must lie in (0,1)");
  if (q < 2.0) throw std::invalid_argument("slobodeckij_norm: q must be >= 2");
  int qi = 0;
  const bool evenq = even_integer(q, qi);
  const double h = u.spacing();
  const double hd = u.dim == 1 ? h : h * h;
  const int n = u.point_count();
  const int ng = u.points_per_axis;
  const double expo = u.dim + theta * q;

  double lq = 0.0;
  for (const double v : u.values) lq += abs_pow(v, q, evenq, qi);
  lq *= hd;

  double semi = 0.0;
  for (int j = 0; j < n; ++j) {
    const double xj1 = u.coord(u.dim == 1 ? j : j % ng);
    const double xj2 = u.dim == 1 ? 0.0 : u.coord(j / ng);
    for (int l = j + 1; l < n; ++l) {
      const double xl1 = u.coord(u.dim == 1 ? l : l % ng);
      const double xl2 = u.dim == 1 ? 0.0 : u.coord(l / ng);
      const double d1 = xj1 - xl1;
      const double d2 = xj2 - xl2;
      const double dist = std::sqrt(d1 * d1 + d2 * d2);
      const double num = abs_pow(u.values[j] - u.values[l], q, evenq, qi);
      semi += num / std::pow(dist, expo);
    }
  }
  semi *= 2.0 * hd * hd; // j != l, both orderings
  return std::pow(lq + semi, 1.0 / q);
}

double holder_norm(const GridField& u, double eps) {
  if (eps < 0.0 || eps > 1.0)
    throw std::invalid_argument("holder_norm: eps must lie in [0,1]");
  double sup = 0.0;
  for (const double v : u.values) sup = std::max(sup, std::abs(v));
  if (eps == 0.0) return sup;

  const int n = u.point_count();
  const int ng = u.points_per_axis;
  double semi = 0.0;
  for (int j = 0; j < n; ++j) {
    const double xj1 = u.coord(u.dim == 1 ? j : j % ng);
    const double xj2 = u.dim == 1 ? 0.0 : u.coord(j / ng);
    for (int l = j + 1; l < n; ++l) {
      const double xl1 = u.coord(u.dim == 1 ? l : l % ng);
      const double xl2 = u.dim == 1 ? 0.0 : u.coord(l / ng);
      const double d1 = xj1 - xl1;
      const double d2 = xj2 - xl2;
      const double dist = std::sqrt(d1 * d1 + d2 * d2);
      const double quot = std::abs(u.values[j] - u.values[l]) / std::pow(dist, eps);
      semi = std::max(semi, quot);
    }
  }
  return sup + semi;
}

} // namespace shesim
