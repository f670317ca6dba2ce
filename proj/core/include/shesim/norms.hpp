#ifndef SHESIM_NORMS_HPP
#define SHESIM_NORMS_HPP

#include "shesim/field.hpp"

namespace shesim {

// Composite-quadrature L^q norm over the interior grid, q >= 2:
//   (h^d sum_j |u(xi_j)|^q)^{1/q}.
// Even integer q uses exact repeated squaring (keeps scaling by powers of
// two bit-exact); other q >= 2 fall back to pow.
double lq_norm(const GridField& u, double q);

// ||x||_theta = ||(-A)^{theta/2} x||_{L^q}, evaluated by composing the
// fractional power, synthesis at n_g points, and the grid L^q norm.
double etheta_norm(const SpectralField& x, double theta, double q, int grid_points_per_axis);

// Sobolev-Slobodeckij norm, theta in (0,1):
//   (||u||_q^q + h^{2d} sum_{j != l} |u_j - u_l|^q / |xi_j - xi_l|^{d + theta q})^{1/q}.
double slobodeckij_norm(const GridField& u, double theta, double q);

// Hoelder norm, eps in [0,1]: sup norm plus the eps-Hoelder quotient over
// grid pairs; eps = 0 returns the sup norm.
double holder_norm(const GridField& u, double eps);

} // namespace shesim

#endif
