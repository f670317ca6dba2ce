#include "shesim/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace shesim {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
}

EigenSystem::EigenSystem(int dim, int modes_per_axis) : dim_(dim), n_(modes_per_axis) {
  if (dim != 1 && dim != 2)
    throw std::invalid_argument("EigenSystem: dimension must be 1 or 2");
  if (modes_per_axis < 1)
    throw std::invalid_argument("EigenSystem: modes_per_axis must be positive");
  count_ = dim == 1 ? n_ : n_ * n_;
}

std::array<int, 2> EigenSystem::multi_index(int flat) const {
  if (dim_ == 1) return {flat + 1, 0};
  return {flat % n_ + 1, flat / n_ + 1};
}

int EigenSystem::flat_index(int k1, int k2) const {
  if (dim_ == 1) return k1 - 1;
  return (k1 - 1) + n_ * (k2 - 1);
}

double EigenSystem::mode_norm_sq(int flat) const {
  const auto k = multi_index(flat);
  double s = static_cast<double>(k[0]) * k[0];
  if (dim_ == 2) s += static_cast<double>(k[1]) * k[1];
  return s;
}

double EigenSystem::lambda(int flat) const { return kPi * kPi * mode_norm_sq(flat); }

std::uint32_t EigenSystem::packed_id(int flat) const {
  const auto k = multi_index(flat);
  if (dim_ == 1) return static_cast<std::uint32_t>(k[0] - 1);
  return static_cast<std::uint32_t>(k[0] - 1) |
         (static_cast<std::uint32_t>(k[1] - 1) << 16);
}

double EigenSystem::eigenfunction(int flat, std::span<const double> xi) const {
  const auto k = multi_index(flat);
  double v = std::sqrt(2.0) * std::sin(k[0] * kPi * xi[0]);
  if (dim_ == 2) v *= std::sqrt(2.0) * std::sin(k[1] * kPi * xi[1]);
  return v;
}

SpectralField::SpectralField(const EigenSystem& b, std::vector<double> c)
    : basis(b), coeffs(std::move(c)) {
  if (coeffs.size() != static_cast<std::size_t>(basis.mode_count()))
    throw std::invalid_argument("SpectralField: coefficient count does not match basis");
}

GridField::GridField(int d, int ng) : dim(d), points_per_axis(ng) {
  if (d != 1 && d != 2) throw std::invalid_argument("GridField: dimension must be 1 or 2");
  if (ng < 1) throw std::invalid_argument("GridField: points_per_axis must be positive");
  values.assign(static_cast<std::size_t>(point_count()), 0.0);
}

int GridField::point_count() const {
  return dim == 1 ? points_per_axis : points_per_axis * points_per_axis;
}

DstPlan::DstPlan(const EigenSystem& basis, int grid_points_per_axis)
    : basis_(basis), ng_(grid_points_per_axis) {
  const int n = basis.modes_per_axis();
  if (ng_ < n)
    throw std::invalid_argument("DstPlan: grid must have at least as many points per axis as modes (n_g >= N)");
  sine_.resize(static_cast<std::size_t>(ng_) * n);
  for (int j = 0; j < ng_; ++j)
    for (int k = 0; k < n; ++k)
      sine_[static_cast<std::size_t>(j) * n + k] =
          std::sin((k + 1) * kPi * (j + 1) / (ng_ + 1));
  if (basis.dim() == 2) scratch_.resize(static_cast<std::size_t>(ng_) * n);
}

void DstPlan::synthesize_into(std::span<const double> coeffs, std::span<double> values) const {
  const int n = basis_.modes_per_axis();
  const double root2 = std::sqrt(2.0);
  if (basis_.dim() == 1) {
    for (int j = 0; j < ng_; ++j) {
      const double* srow = &sine_[static_cast<std::size_t>(j) * n];
      double acc = 0.0;
      for (int k = 0; k < n; ++k) acc += coeffs[k] * srow[k];
      values[j] = root2 * acc;
    }
    return;
  }
  // d = 2: contract k1 then k2; scratch_(j1, k2) = sum_k1 c(k1,k2) sin(k1, j1)
  for (int j1 = 0; j1 < ng_; ++j1) {
    const double* srow = &sine_[static_cast<std::size_t>(j1) * n];
    for (int k2 = 0; k2 < n; ++k2) {
      double acc = 0.0;
      const double* c = &coeffs[static_cast<std::size_t>(k2) * n];
      for (int k1 = 0; k1 < n; ++k1) acc += c[k1] * srow[k1];
      scratch_[static_cast<std::size_t>(j1) * n + k2] = acc;
    }
  }
  for (int j2 = 0; j2 < ng_; ++j2) {
    const double* srow = &sine_[static_cast<std::size_t>(j2) * n];
    for (int j1 = 0; j1 < ng_; ++j1) {
      double acc = 0.0;
      const double* t = &scratch_[static_cast<std::size_t>(j1) * n];
      for (int k2 = 0; k2 < n; ++k2) acc += t[k2] * srow[k2];
      values[static_cast<std::size_t>(j2) * ng_ + j1] = 2.0 * acc;
    }
  }
}

void DstPlan::analyze_into(std::span<const double> values, std::span<double> coeffs) const {
  const int n = basis_.modes_per_axis();
  // DST-I orthogonality: sum_j sin(k pi j/(n+1)) sin(l pi j/(n+1)) = (n_g+1)/2 delta_kl
  const double scale1 = std::sqrt(2.0) / (ng_ + 1);
  if (basis_.dim() == 1) {
    for (int k = 0; k < n; ++k) {
      double acc = 0.0;
      for (int j = 0; j < ng_; ++j)
        acc += values[j] * sine_[static_cast<std::size_t>(j) * n + k];
      coeffs[k] = scale1 * acc;
    }
    return;
  }
  const double scale2 = 2.0 / ((ng_ + 1) * static_cast<double>(ng_ + 1));
  // contract j1 then j2; scratch_(j2, k1) = sum_j1 u(j1,j2) sin(j1, k1)
  for (int j2 = 0; j2 < ng_; ++j2) {
    const double* urow = &values[static_cast<std::size_t>(j2) * ng_];
    for (int k1 = 0; k1 < n; ++k1) {
      double acc = 0.0;
      for (int j1 = 0; j1 < ng_; ++j1)
        acc += urow[j1] * sine_[static_cast<std::size_t>(j1) * n + k1];
      scratch_[static_cast<std::size_t>(j2) * n + k1] = acc;
    }
  }
  for (int k2 = 0; k2 < n; ++k2) {
    for (int k1 = 0; k1 < n; ++k1) {
      double acc = 0.0;
      for (int j2 = 0; j2 < ng_; ++j2)
        acc += scratch_[static_cast<std::size_t>(j2) * n + k1] *
               sine_[static_cast<std::size_t>(j2) * n + k2];
      coeffs[static_cast<std::size_t>(k2) * n + k1] = scale2 * acc;
    }
  }
}

GridField DstPlan::synthesize(const SpectralField& x) const {
  GridField u(basis_.dim(), ng_);
  synthesize_into(x.coeffs, u.values);
  return u;
}

SpectralField DstPlan::analyze(const GridField& u) const {
  if (u.points_per_axis != ng_ || u.dim != basis_.dim())
    throw std::invalid_argument("DstPlan::analyze: grid does not match plan");
  SpectralField x(basis_);
  analyze_into(u.values, x.coeffs);
  return x;
}

SpectralField apply_semigroup(const SpectralField& x, double t) {
  if (t < 0.0)
    throw std::domain_error("apply_semigroup: negative time t = " + std::to_string(t));
  if (t == 0.0) return x;
  SpectralField y(x.basis);
  for (int k = 0; k < x.basis.mode_count(); ++k)
    y[k] = x[k] * std::exp(-x.basis.lambda(k) * t);
  return y;
}

SpectralField apply_fractional_power(const SpectralField& x, double s) {
  if (s == 0.0) return x;
  SpectralField y(x.basis);
  for (int k = 0; k < x.basis.mode_count(); ++k)
    y[k] = x[k] * std::pow(x.basis.lambda(k), s);
  return y;
}

GridField synthesize(const SpectralField& x, int grid_points_per_axis) {
  return DstPlan(x.basis, grid_points_per_axis).synthesize(x);
}

SpectralField analyze(const GridField& u, int modes_per_axis) {
  if (modes_per_axis > u.points_per_axis)
    throw std::invalid_argument("analyze: requested modes exceed grid resolution (N <= n_g)");
  EigenSystem basis(u.dim, modes_per_axis);
  return DstPlan(basis, u.points_per_axis).analyze(u);
}

} // namespace shesim
