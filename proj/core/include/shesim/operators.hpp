#ifndef SHESIM_OPERATORS_HPP
#define SHESIM_OPERATORS_HPP

#include <cstdint>
#include <vector>

#include "shesim/field.hpp"
#include "shesim/noise.hpp"
#include "shesim/scalar_fn.hpp"

namespace shesim {

// Finite-rank operator U -> L^q, stored by its images of the noise
// eigenfunctions: column n is the grid field R h_n. All columns share one
// grid.
struct FiniteRankOperator {
  int dim = 1;
  int points_per_axis = 0;
  std::vector<int> modes;        // flat eigenfunction indices
  std::vector<GridField> columns;

  void add_column(int mode, GridField col);
  bool empty() const { return columns.empty(); }
};

// Nemytskii drift: (F u)(xi) = f(u(xi)).
GridField apply_F(const GridField& u, const ScalarFn& f);

// Diffusion column: (G(u) h_n)(xi) = sqrt(lambda_n^Q) g(u(xi)) h_n(xi).
// Rejects modes beyond the spec truncation.
GridField apply_G_mode(const GridField& u, int mode, const ScalarFn& g, const NoiseSpec& spec);

// Full finite-rank image of G(u) over the spec's modes.
FiniteRankOperator diffusion_operator(const GridField& u, const ScalarFn& g, const NoiseSpec& spec);

struct GammaNormEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  int samples = 0;
};

// Monte Carlo gamma-radonifying norm: (E || sum_n g_n R h_n ||_{L^q}^2)^{1/2}
// over independent N(0,1) coefficients; the standard error comes from the
// delta method on the second moment.
GammaNormEstimate gamma_norm_mc(const FiniteRankOperator& R, double q, int samples,
                                std::uint64_t seed);

// Exact Hilbert-Schmidt norm at q = 2 via Parseval on the grid transform;
// the oracle for gamma_norm_mc.
double hilbert_schmidt_norm(const FiniteRankOperator& R, int modes_per_axis);

struct IdealPropertyReport {
  double lhs = 0.0;       // gamma norm of (-A)^{theta/2} S(t) R
  double rhs_bound = 0.0; // (theta/(2 e t))^{theta/2} * gamma norm of R
  double lhs_se = 0.0;
  double rhs_se = 0.0;
  bool holds = false;     // lhs <= rhs_bound * (1 + 5 * relative SE)
};

// Checks the ideal property specialised to S2 = (-A)^{theta/2} S(t) with the
// exact diagonal operator-norm bound sup_l l^{theta/2} e^{-l t}.
IdealPropertyReport ideal_property_check(const FiniteRankOperator& R, const EigenSystem& basis,
                                         double t, double theta, double q, int samples,
                                         std::uint64_t seed);

struct AssumptionConstants {
  double sigma = 0.0;      // fitted singularity exponent: y ~ C t^{-sigma}
  double prefactor = 0.0;  // fitted C
  double r_squared = 0.0;
  double t_min = 0.0, t_max = 0.0;
  bool reliable = false;   // r_squared >= 0.9
};

enum class AssumptionPath { drift, diffusion };

// Fits K(t) ~ C t^{-sigma} by log-log least squares on
//   drift:     y(t) = ||S(t) F(z)||_theta / (1 + ||z||_theta)
//   diffusion: y(t) = gamma_norm(S(t) G(z)) / (1 + ||z||_theta)
// over the supplied t grid.
AssumptionConstants fit_assumption_constants(AssumptionPath which, const ScalarFn& fn,
                                             const NoiseSpec& spec, double theta,
                                             const GridField& z, const std::vector<double>& t_grid,
                                             double q, int samples, std::uint64_t seed);

// Least-squares slope/intercept/R^2 of y against x (shared by the fitters).
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

} // namespace shesim

#endif
