#include "shesim/regularity.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "shesim/norms.hpp"
#include "shesim/rng.hpp"

namespace shesim {

namespace {

double increment_norm(const EnsembleData& ens, int path, int i1, int i2, NormKind kind,
                      double theta, double q, const DstPlan& plan, const EigenSystem& basis,
                      std::vector<double>& scratch, GridField& grid) {
  const int nk = ens.mode_count();
  const auto a = ens.snapshot(path, i1);
  const auto b = ens.snapshot(path, i2);
  scratch.resize(static_cast<std::size_t>(nk));
  for (int k = 0; k < nk; ++k) scratch[k] = b[k] - a[k];
  switch (kind) {
    case NormKind::Lq:
      plan.synthesize_into(scratch, grid.values);
      return lq_norm(grid, q);
    case NormKind::Etheta: {
      SpectralField x(basis, scratch);
      return etheta_norm(x, theta, q, plan.grid_points_per_axis());
    }
    case NormKind::Choelder:
      plan.synthesize_into(scratch, grid.values);
      return holder_norm(grid, theta);
  }
  return 0.0;
}

} // namespace

HolderEstimate temporal_holder_estimate(const EnsembleData& ens, double p, NormKind kind,
                                        double theta, const LagSpec& lags, double q,
                                        int norm_grid_points, std::uint64_t seed) {
  HolderEstimate est;
  est.kind = kind;
  est.theta = theta;
  est.p = p;
  est.lags_used = static_cast<int>(lags.lags.size());
  if (ens.path_count() == 0 || lags.lags.size() < 2 || lags.anchors.empty())
    return est;

  const EigenSystem basis(ens.dim, ens.modes_per_axis);
  const DstPlan plan(basis, norm_grid_points);
  GridField grid(ens.dim, norm_grid_points);
  std::vector<double> scratch;

  const int npaths = ens.path_count();
  const int nlags = static_cast<int>(lags.lags.size());
  const int nanch = static_cast<int>(lags.anchors.size());

  // per (lag, path): increment norm^p averaged over anchors
  std::vector<std::vector<double>> table(static_cast<std::size_t>(nlags),
                                         std::vector<double>(static_cast<std::size_t>(npaths), 0.0));
  for (int li = 0; li < nlags; ++li) {
    for (int ai = 0; ai < nanch; ++ai) {
      const double a = lags.anchors[ai];
      const int i1 = ens.time_index(a);
      const int i2 = ens.time_index(a + lags.lags[li]);
      if (i1 < 0 || i2 < 0)
        throw std::invalid_argument("temporal_holder_estimate: anchor+lag not among snapshot times");
      for (int pa = 0; pa < npaths; ++pa) {
        const double nrm =
            increment_norm(ens, pa, i1, i2, kind, theta, q, plan, basis, scratch, grid);
        table[li][pa] += std::pow(nrm, p) / nanch;
      }
    }
  }

  std::vector<double> logl(static_cast<std::size_t>(nlags));
  for (int li = 0; li < nlags; ++li) logl[li] = std::log(lags.lags[li]);

  auto slope_of = [&](const std::vector<int>& idx) {
    std::vector<double> logy(static_cast<std::size_t>(nlags));
    for (int li = 0; li < nlags; ++li) {
      double s = 0.0;
      for (const int pa : idx) s += table[li][pa];
      s /= static_cast<double>(idx.size());
      if (s <= 0.0) return std::pair<double, double>{0.0, -1.0};
      logy[li] = std::log(s);
    }
    double spread = 0.0;
    for (int li = 1; li < nlags; ++li) spread = std::max(spread, std::abs(logy[li] - logy[0]));
    if (spread < 1e-12) return std::pair<double, double>{0.0, -1.0}; // flat: withhold
    const LineFit fit = fit_line(logl, logy);
    return std::pair<double, double>{fit.slope / p, fit.r_squared};
  };

  std::vector<int> all(static_cast<std::size_t>(npaths));
  for (int i = 0; i < npaths; ++i) all[i] = i;
  const auto [expo, r2] = slope_of(all);
  est.exponent = expo;
  est.r_squared = r2;
  est.structure.resize(static_cast<std::size_t>(nlags));
  for (int li = 0; li < nlags; ++li) {
    double s = 0.0;
    for (int pa = 0; pa < npaths; ++pa) s += table[li][pa];
    est.structure[li] = s / npaths;
  }

  // bootstrap over paths
  constexpr int kResamples = 200;
  std::vector<double> boots;
  boots.reserve(kResamples);
  std::vector<int> idx(static_cast<std::size_t>(npaths));
  for (int b = 0; b < kResamples; ++b) {
    for (int i = 0; i < npaths; ++i)
      idx[i] = static_cast<int>(rng::uniform_index(seed, rng::kBootstrap,
                                                   static_cast<std::uint64_t>(b),
                                                   static_cast<std::uint32_t>(i), 0,
                                                   static_cast<std::uint64_t>(npaths)));
    const auto [be, br2] = slope_of(idx);
    if (br2 >= 0.0) boots.push_back(be);
  }
  if (boots.size() > 1) {
    double mean = 0.0;
    for (const double v : boots) mean += v;
    mean /= static_cast<double>(boots.size());
    double var = 0.0;
    for (const double v : boots) var += (v - mean) * (v - mean);
    est.std_error = std::sqrt(var / (static_cast<double>(boots.size()) - 1.0));
  }

  est.reported = est.r_squared >= 0.95 && est.lags_used >= 5;
  return est;
}

std::vector<SpatialSweepRow> spatial_regularity_sweep(const std::vector<EnsembleData>& ensembles,
                                                      const std::vector<double>& thetas,
                                                      double q) {
  if (ensembles.size() < 3)
    throw std::invalid_argument("spatial_regularity_sweep: need at least 3 resolutions");
  for (std::size_t i = 1; i < ensembles.size(); ++i) {
    if (ensembles[i].master_seed != ensembles[0].master_seed)
      throw std::invalid_argument("spatial_regularity_sweep: ensembles not noise-coupled (seeds differ)");
    if (ensembles[i].modes_per_axis <= ensembles[i - 1].modes_per_axis)
      throw std::invalid_argument("spatial_regularity_sweep: resolutions must increase");
    if (std::abs(ensembles[i].horizon - ensembles[0].horizon) > 1e-12)
      throw std::invalid_argument("spatial_regularity_sweep: horizons differ");
    if (ensembles[i].path_count() != ensembles[0].path_count())
      throw std::invalid_argument("spatial_regularity_sweep: ensemble sizes differ");
  }

  std::vector<SpatialSweepRow> rows;
  for (const double theta : thetas) {
    SpatialSweepRow row;
    row.theta = theta;
    for (const auto& ens : ensembles) {
      const EigenSystem basis(ens.dim, ens.modes_per_axis);
      const int ng = 2 * ens.modes_per_axis;
      const int ti = static_cast<int>(ens.times.size()) - 1;
      double acc = 0.0;
      for (int pa = 0; pa < ens.path_count(); ++pa) {
        const auto c = ens.snapshot(pa, ti);
        SpectralField x(basis, std::vector<double>(c.begin(), c.end()));
        const double nrm = etheta_norm(x, theta, q, ng);
        acc += nrm * nrm;
      }
      row.resolutions.push_back(ens.modes_per_axis);
      row.mean_sq_norm.push_back(acc / ens.path_count());
    }
    for (std::size_t i = 1; i < row.mean_sq_norm.size(); ++i)
      row.ratios.push_back(row.mean_sq_norm[i] / row.mean_sq_norm[i - 1]);
    row.bounded = row.ratios.back() <= 1.15;
    rows.push_back(std::move(row));
  }
  return rows;
}

MomentReport moment_bound_check(const EnsembleData& ens, double p, double theta,
                                const SpectralField& X0, double q, int norm_grid_points) {
  MomentReport rep;
  rep.blowup_count = ens.blowup_count;
  rep.blowup_fraction =
      ens.attempted_paths > 0 ? static_cast<double>(ens.blowup_count) / ens.attempted_paths : 0.0;
  const EigenSystem basis(ens.dim, ens.modes_per_axis);
  for (std::size_t ti = 0; ti < ens.times.size(); ++ti) {
    double acc = 0.0;
    for (int pa = 0; pa < ens.path_count(); ++pa) {
      const auto c = ens.snapshot(pa, static_cast<int>(ti));
      SpectralField x(basis, std::vector<double>(c.begin(), c.end()));
      acc += std::pow(etheta_norm(x, theta, q, norm_grid_points), p);
    }
    rep.sup_moment = std::max(rep.sup_moment, acc / std::max(ens.path_count(), 1));
  }
  const double x0n = etheta_norm(X0, theta, q, norm_grid_points);
  rep.bound_ratio = rep.sup_moment / (1.0 + std::pow(x0n, p));
  rep.pass = std::isfinite(rep.sup_moment) && rep.blowup_fraction <= 1e-3;
  return rep;
}

LpContinuityReport lp_continuity_check(const EnsembleData& ens, double p, double theta,
                                       const std::vector<std::pair<double, double>>& pairs,
                                       double q, int norm_grid_points) {
  LpContinuityReport rep;
  const EigenSystem basis(ens.dim, ens.modes_per_axis);
  const DstPlan plan(basis, norm_grid_points);
  GridField grid(ens.dim, norm_grid_points);
  std::vector<double> scratch;

  std::vector<std::pair<double, double>> sorted = pairs;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) {
    return std::abs(a.first - a.second) > std::abs(b.first - b.second);
  });
  for (const auto& [t1, t2] : sorted) {
    const int i1 = ens.time_index(t1);
    const int i2 = ens.time_index(t2);
    if (i1 < 0 || i2 < 0)
      throw std::invalid_argument("lp_continuity_check: pair times not among snapshots");
    double acc = 0.0;
    for (int pa = 0; pa < ens.path_count(); ++pa) {
      const double nrm = increment_norm(ens, pa, i1, i2, NormKind::Etheta, theta, q, plan,
                                        basis, scratch, grid);
      acc += std::pow(nrm, p);
    }
    rep.gaps.push_back(std::abs(t1 - t2));
    rep.moments.push_back(acc / std::max(ens.path_count(), 1));
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.moments.size(); ++i)
    if (rep.moments[i] > 1.10 * rep.moments[i - 1]) rep.monotone = false;
  if (!rep.moments.empty() && rep.moments.front() > 0.0)
    rep.small_large_ratio = rep.moments.back() / rep.moments.front();
  rep.pass = rep.monotone && rep.small_large_ratio <= 1e-2;
  return rep;
}

BurkholderReport burkholder_check(const std::vector<StepIntegrand>& integrands, double p, double q,
                                  int noise_modes, int steps, double horizon, int n_paths,
                                  int gamma_samples, std::uint64_t seed) {
  BurkholderReport rep;
  rep.underpowered = integrands.size() < 20;
  if (integrands.empty()) return rep;

  NoiseSpec cyl = NoiseSpec::from_list(1, noise_modes,
                                       std::vector<double>(static_cast<std::size_t>(noise_modes), 1.0),
                                       0.0);
  const double dt = horizon / steps;

  // one shared cylindrical Wiener ensemble: ratios of scaled copies of the
  // same integrand are then exactly homogeneous
  std::vector<WienerPath> wiener;
  wiener.reserve(static_cast<std::size_t>(n_paths));
  for (int pa = 0; pa < n_paths; ++pa)
    wiener.push_back(sample_wiener_increments(cyl, steps, horizon, seed,
                                              static_cast<std::uint64_t>(pa)));

  for (std::size_t ii = 0; ii < integrands.size(); ++ii) {
    const StepIntegrand& phi = integrands[ii];
    if (phi.pieces.empty()) {
      rep.ratios.push_back(0.0);
      continue;
    }
    const int ngf = phi.pieces.front().points_per_axis;
    GridField acc(1, ngf);
    double lhs_sum = 0.0;
    std::vector<double> mod_pows(phi.pieces.size(), 0.0); // E |scale|^p per piece

    for (int pa = 0; pa < n_paths; ++pa) {
      const WienerPath& W = wiener[static_cast<std::size_t>(pa)];
      std::fill(acc.values.begin(), acc.values.end(), 0.0);
      double sup_norm_p = 0.0;
      std::size_t piece = 0;
      double scale = 1.0;
      std::vector<double> cum(static_cast<std::size_t>(noise_modes), 0.0);
      for (int m = 0; m < steps; ++m) {
        const double t = m * dt;
        while (piece + 1 < phi.piece_times.size() - 1 && t >= phi.piece_times[piece + 1] - 1e-12)
          ++piece;
        if (m == 0 || std::abs(t - phi.piece_times[piece]) < 1e-12) {
          scale = 1.0;
          if (phi.modulation == StepIntegrand::Modulation::tanh_w)
            scale = 1.0 + 0.5 * std::tanh(cum[static_cast<std::size_t>(phi.modulation_mode)]);
          mod_pows[piece] += std::pow(std::abs(scale), p) / n_paths;
        }
        const FiniteRankOperator& op = phi.pieces[piece];
        for (std::size_t c = 0; c < op.columns.size(); ++c) {
          const double dB = W.increment(m, op.modes[c]);
          const auto& col = op.columns[c].values;
          const double s = scale * dB;
          for (std::size_t i = 0; i < col.size(); ++i) acc.values[i] += s * col[i];
        }
        for (int n = 0; n < noise_modes; ++n) cum[static_cast<std::size_t>(n)] += W.increment(m, n);
        const double nrm = lq_norm(acc, q);
        sup_norm_p = std::max(sup_norm_p, std::pow(nrm, p));
      }
      lhs_sum += sup_norm_p;
    }
    const double lhs = lhs_sum / n_paths;

    double rhs_inner = 0.0;
    for (std::size_t pc = 0; pc < phi.pieces.size(); ++pc) {
      const double len = phi.piece_times[pc + 1] - phi.piece_times[pc];
      // gamma draws shared across integrands (keyed by piece only): scaled
      // copies of one integrand then have exactly homogeneous ratios
      const double gnorm =
          gamma_norm_mc(phi.pieces[pc], q, gamma_samples, seed + 13 * pc).estimate;
      double e_norm_p = std::pow(gnorm, p);
      if (phi.modulation != StepIntegrand::Modulation::none) e_norm_p *= mod_pows[pc];
      rhs_inner += len * std::pow(e_norm_p, 2.0 / p);
    }
    const double rhs = std::pow(rhs_inner, p / 2.0);
    rep.ratios.push_back(rhs > 0.0 ? lhs / rhs : 0.0);
  }

  std::vector<double> sorted = rep.ratios;
  std::sort(sorted.begin(), sorted.end());
  rep.median_ratio = sorted[sorted.size() / 2];
  rep.max_ratio = sorted.back();
  rep.pass = !rep.underpowered && rep.max_ratio <= 10.0 * rep.median_ratio;
  return rep;
}

} // namespace shesim
