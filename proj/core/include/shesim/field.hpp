#ifndef SHESIM_FIELD_HPP
#define SHESIM_FIELD_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace shesim {

// Dirichlet Laplacian eigensystem on (0,1)^d, d in {1,2}:
//   lambda_k = pi^2 |k|^2,  h_k(xi) = prod_i sqrt(2) sin(k_i pi xi_i),
// with multi-indices k in {1..N}^d flattened row-major (k1 fastest).
class EigenSystem {
public:
  EigenSystem(int dim, int modes_per_axis);

  int dim() const { return dim_; }
  int modes_per_axis() const { return n_; }
  int mode_count() const { return count_; }

  std::array<int, 2> multi_index(int flat) const;
  int flat_index(int k1, int k2 = 1) const;

  double lambda(int flat) const;
  // |k|^2 = k1^2 (+ k2^2), the dimensionless mode magnitude.
  double mode_norm_sq(int flat) const;
  double eigenfunction(int flat, std::span<const double> xi) const;
  // Resolution-independent mode id for RNG keying: identical multi-indices
  // map to the same id at every truncation, so ensembles at different
  // resolutions share their common-mode noise.
  std::uint32_t packed_id(int flat) const;

private:
  int dim_;
  int n_;
  int count_;
};

// Coefficients of an L^q((0,1)^d) function in the Dirichlet sine basis.
struct SpectralField {
  EigenSystem basis;
  std::vector<double> coeffs; // size basis.mode_count()

  explicit SpectralField(const EigenSystem& b)
      : basis(b), coeffs(static_cast<std::size_t>(b.mode_count()), 0.0) {}
  SpectralField(const EigenSystem& b, std::vector<double> c);

  double& operator[](int flat) { return coeffs[static_cast<std::size_t>(flat)]; }
  double operator[](int flat) const { return coeffs[static_cast<std::size_t>(flat)]; }
};

// Point values on the interior collocation grid xi_j = j/(n_g+1).
struct GridField {
  int dim;
  int points_per_axis; // n_g
  std::vector<double> values; // size n_g^d, row-major (j1 fastest)

  GridField(int d, int ng);
  double spacing() const { return 1.0 / (points_per_axis + 1); }
  int point_count() const;
  // coordinate of grid node j along one axis
  double coord(int j) const { return (j + 1) * spacing(); }
};

// Cached sine matrices for the forward/inverse transform between the first
// N modes per axis and an n_g-point collocation grid (n_g >= N).
class DstPlan {
public:
  DstPlan(const EigenSystem& basis, int grid_points_per_axis);

  int grid_points_per_axis() const { return ng_; }
  const EigenSystem& basis() const { return basis_; }

  GridField synthesize(const SpectralField& x) const;
  SpectralField analyze(const GridField& u) const;

  // In-place workspace variants used by the solver hot loop.
  void synthesize_into(std::span<const double> coeffs, std::span<double> values) const;
  void analyze_into(std::span<const double> values, std::span<double> coeffs) const;

private:
  EigenSystem basis_;
  int ng_;
  std::vector<double> sine_; // [n_g x N], sine_(j,k) = sin((k+1) pi (j+1)/(n_g+1))
  mutable std::vector<double> scratch_; // d=2 axis buffer
  void apply_axis_pair(std::span<const double> in, std::span<double> out, bool forward) const;
};

// S(t): coefficient-wise multiplication by exp(-lambda_k t). Rejects t < 0.
SpectralField apply_semigroup(const SpectralField& x, double t);

// (-A)^s: coefficient-wise multiplication by lambda_k^s.
SpectralField apply_fractional_power(const SpectralField& x, double s);

// One-shot transforms (build a plan internally). n_g >= N required for
// synthesize; N <= n_g required for analyze.
GridField synthesize(const SpectralField& x, int grid_points_per_axis);
SpectralField analyze(const GridField& u, int modes_per_axis);

} // namespace shesim

#endif
