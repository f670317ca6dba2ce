#include "shesim/operators.hpp"

#include <cmath>
#include <stdexcept>

#include "shesim/norms.hpp"
#include "shesim/rng.hpp"

namespace shesim {

void FiniteRankOperator::add_column(int mode, GridField col) {
  if (columns.empty()) {
    dim = col.dim;
    points_per_axis = col.points_per_axis;
  } else if (col.dim != dim || col.points_per_axis != points_per_axis) {
    throw std::invalid_argument("FiniteRankOperator: columns must share one grid");
  }
  modes.push_back(mode);
  columns.push_back(std::move(col));
}

GridField apply_F(const GridField& u, const ScalarFn& f) {
  GridField out(u.dim, u.points_per_axis);
  for (std::size_t i = 0; i < u.values.size(); ++i) out.values[i] = f(u.values[i]);
  return out;
}

GridField apply_G_mode(const GridField& u, int mode, const ScalarFn& g, const NoiseSpec& spec) {
  if (mode < 0 || mode >= spec.mode_count())
    throw std::invalid_argument("apply_G_mode: mode index beyond noise truncation");
  const double root_lq = std::sqrt(spec.eigenvalue(mode));
  GridField out(u.dim, u.points_per_axis);
  if (root_lq == 0.0) return out;
  const EigenSystem basis(spec.dim, spec.modes_per_axis);
  const int ng = u.points_per_axis;
  if (u.dim == 1) {
    for (int j = 0; j < ng; ++j) {
      const double xi[1] = {u.coord(j)};
      out.values[j] = root_lq * g(u.values[j]) * basis.eigenfunction(mode, xi);
    }
  } else {
    for (int j2 = 0; j2 < ng; ++j2)
      for (int j1 = 0; j1 < ng; ++j1) {
        const double xi[2] = {u.coord(j1), u.coord(j2)};
        const std::size_t idx = static_cast<std::size_t>(j2) * ng + j1;
        out.values[idx] = root_lq * g(u.values[idx]) * basis.eigenfunction(mode, xi);
      }
  }
  return out;
}

FiniteRankOperator diffusion_operator(const GridField& u, const ScalarFn& g,
                                      const NoiseSpec& spec) {
  FiniteRankOperator R;
  for (int n = 0; n < spec.mode_count(); ++n)
    R.add_column(n, apply_G_mode(u, n, g, spec));
  return R;
}

GammaNormEstimate gamma_norm_mc(const FiniteRankOperator& R, double q, int samples,
                                std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("gamma_norm_mc: need at least one sample");
  GammaNormEstimate est;
  est.samples = samples;
  if (R.empty()) return est;

  GridField acc(R.dim, R.points_per_axis);
  double sum = 0.0, sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    std::fill(acc.values.begin(), acc.values.end(), 0.0);
    for (std::size_t c = 0; c < R.columns.size(); ++c) {
      const double gcoef = rng::normal(seed, rng::kGamma, static_cast<std::uint64_t>(s),
                                       static_cast<std::uint32_t>(c), 0);
      const auto& col = R.columns[c].values;
      for (std::size_t i = 0; i < col.size(); ++i) acc.values[i] += gcoef * col[i];
    }
    const double norm = lq_norm(acc, q);
    const double y = norm * norm;
    sum += y;
    sum_sq += y * y;
  }
  const double m2 = sum / samples;
  est.estimate = std::sqrt(m2);
  if (samples > 1 && m2 > 0.0) {
    const double var_y = (sum_sq - samples * m2 * m2) / (samples - 1);
    const double se_m2 = std::sqrt(var_y / samples);
    est.std_error = se_m2 / (2.0 * est.estimate);
  }
  return est;
}

double hilbert_schmidt_norm(const FiniteRankOperator& R, int modes_per_axis) {
  double sum = 0.0;
  for (const auto& col : R.columns) {
    const SpectralField c = analyze(col, modes_per_axis);
    for (const double v : c.coeffs) sum += v * v;
  }
  return std::sqrt(sum);
}

namespace {

FiniteRankOperator smoothed_operator(const FiniteRankOperator& R, const EigenSystem& basis,
                                     double t, double theta) {
  const DstPlan plan(basis, R.points_per_axis);
  FiniteRankOperator out;
  for (std::size_t c = 0; c < R.columns.size(); ++c) {
    SpectralField coef = plan.analyze(R.columns[c]);
    for (int k = 0; k < basis.mode_count(); ++k) {
      const double lam = basis.lambda(k);
      coef[k] *= std::pow(lam, theta / 2.0) * std::exp(-lam * t);
    }
    out.add_column(R.modes[c], plan.synthesize(coef));
  }
  return out;
}

} // namespace

IdealPropertyReport ideal_property_check(const FiniteRankOperator& R, const EigenSystem& basis,
                                         double t, double theta, double q, int samples,
                                         std::uint64_t seed) {
  if (t <= 0.0) throw std::invalid_argument("ideal_property_check: need t > 0");
  IdealPropertyReport rep;
  if (R.empty()) {
    rep.holds = true;
    return rep;
  }
  const FiniteRankOperator SR = smoothed_operator(R, basis, t, theta);
  // common gamma draws on both sides suppress MC variance in the ratio
  const GammaNormEstimate lhs = gamma_norm_mc(SR, q, samples, seed);
  const GammaNormEstimate rhs = gamma_norm_mc(R, q, samples, seed);
  const double op_bound =
      theta == 0.0 ? 1.0 : std::pow(theta / (2.0 * std::exp(1.0) * t), theta / 2.0);
  rep.lhs = lhs.estimate;
  rep.lhs_se = lhs.std_error;
  rep.rhs_se = rhs.std_error;
  rep.rhs_bound = op_bound * rhs.estimate;
  const double rel_se =
      (lhs.estimate > 0.0 ? lhs.std_error / lhs.estimate : 0.0) +
      (rhs.estimate > 0.0 ? rhs.std_error / rhs.estimate : 0.0);
  rep.holds = rep.lhs <= rep.rhs_bound * (1.0 + 5.0 * rel_se) + 1e-14;
  return rep;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need matching x/y with at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  LineFit fit;
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) return fit;
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  const double ybar = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (fit.intercept + fit.slope * x[i]);
    ss_res += e * e;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

AssumptionConstants fit_assumption_constants(AssumptionPath which, const ScalarFn& fn,
                                             const NoiseSpec& spec, double theta,
                                             const GridField& z, const std::vector<double>& t_grid,
                                             double q, int samples, std::uint64_t seed) {
  if (t_grid.size() < 2)
    throw std::invalid_argument("fit_assumption_constants: need at least two t values");
  const EigenSystem basis(spec.dim, spec.modes_per_axis);
  const DstPlan plan(basis, z.points_per_axis);
  const SpectralField zc = plan.analyze(z);
  const double denom = 1.0 + etheta_norm(zc, theta, q, z.points_per_axis);

  std::vector<double> logt, logy;
  for (const double t : t_grid) {
    double y = 0.0;
    if (which == AssumptionPath::drift) {
      SpectralField Fz = plan.analyze(apply_F(z, fn));
      y = etheta_norm(apply_semigroup(Fz, t), theta, q, z.points_per_axis) / denom;
    } else {
      FiniteRankOperator G = diffusion_operator(z, fn, spec);
      const FiniteRankOperator SG = smoothed_operator(G, basis, t, theta);
      y = gamma_norm_mc(SG, q, samples, seed).estimate / denom;
    }
    if (y > 0.0) {
      logt.push_back(std::log(t));
      logy.push_back(std::log(y));
    }
  }

  AssumptionConstants out;
  out.t_min = t_grid.front();
  out.t_max = t_grid.back();
  if (logt.size() < 2) return out; // degenerate: all y vanished
  double spread = 0.0;
  for (std::size_t i = 1; i < logy.size(); ++i)
    spread = std::max(spread, std::abs(logy[i] - logy[0]));
  if (spread < 1e-12) {
    out.sigma = 0.0;
    out.prefactor = std::exp(logy[0]);
    out.r_squared = 0.0; // flagged: no variation to fit
    return out;
  }
  const LineFit fit = fit_line(logt, logy);
  out.sigma = -fit.slope;
  out.prefactor = std::exp(fit.intercept);
  out.r_squared = fit.r_squared;
  out.reliable = fit.r_squared >= 0.9;
  return out;
}

} // namespace shesim
