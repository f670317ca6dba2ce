#include "shesim/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "shesim/ensemble.hpp"
#include "shesim/hash.hpp"
#include "shesim/norms.hpp"
#include "shesim/operators.hpp"
#include "shesim/parallel.hpp"
#include "shesim/regularity.hpp"
#include "shesim/rng.hpp"

namespace shesim {

namespace {

using ordered_json = nlohmann::ordered_json;

std::string fmtg(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void write_text_file(const std::filesystem::path& file, const std::string& text) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  os << text;
}

void write_csv(const std::filesystem::path& file, const std::string& manifest_hash,
               const std::vector<std::string>& columns,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream os(file);
  if (!os) throw std::runtime_error("cannot write " + file.string());
  os << "# manifest_hash=" << manifest_hash << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) os << (i ? "," : "") << columns[i];
  os << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

NoiseSpec noise_at_resolution(const NoiseSpec& noise, int modes_per_axis) {
  if (noise.law == NoiseSpec::Law::parametric) {
    NoiseSpec out = noise;
    out.modes_per_axis = modes_per_axis;
    return out;
  }
  // explicit list: keep the eigenvalues of the multi-indices inside the box
  const EigenSystem from(noise.dim, noise.modes_per_axis);
  const EigenSystem to(noise.dim, modes_per_axis);
  std::vector<double> vals(static_cast<std::size_t>(to.mode_count()), 0.0);
  for (int n = 0; n < to.mode_count(); ++n) {
    const auto k = to.multi_index(n);
    if (k[0] <= noise.modes_per_axis && (noise.dim == 1 || k[1] <= noise.modes_per_axis))
      vals[static_cast<std::size_t>(n)] =
          noise.eigenvalue(from.flat_index(k[0], noise.dim == 1 ? 1 : k[1]));
  }
  NoiseSpec out = NoiseSpec::from_list(noise.dim, modes_per_axis, std::move(vals), noise.epsilon);
  out.truncated_view = noise.truncated_view;
  return out;
}

struct PicardSetup {
  double c_F = 0.0;
  double c_G = 0.0;
  double weight = 1.0;
  double factor_at_weight = 0.0;
};

// Empirical Lipschitz-difference constants: the largest observed ratio
// ||S(t)(F(x)-F(y))|| / ||x-y|| (resp. the gamma norm for G) over random
// field pairs and a decade of t; these are the constant kernels the
// weighted-norm contraction factor takes.
PicardSetup picard_setup(const ExperimentManifest& m) {
  PicardSetup s;
  const EigenSystem basis(m.sim.dim, m.sim.modes_per_axis);
  const int ng = m.sim.dealias_points(m.noise.modes_per_axis);
  const DstPlan plan(basis, ng);
  const NoiseSpec noise = noise_at_resolution(m.noise, std::min(m.noise.modes_per_axis,
                                                                m.sim.modes_per_axis));
  std::vector<double> t_grid;
  for (int i = 0; i < 5; ++i)
    t_grid.push_back(m.sim.horizon * std::pow(10.0, -3.0 + 1.0 * i / 4.0));

  auto random_pair_field = [&](int rep, int which) {
    SpectralField x(basis);
    for (int k = 0; k < basis.mode_count(); ++k)
      x[k] = rng::normal(m.sim.master_seed, rng::kInit,
                         static_cast<std::uint64_t>(1000 + rep),
                         static_cast<std::uint32_t>(which), static_cast<std::uint32_t>(k)) /
             std::sqrt(basis.mode_norm_sq(k));
    return x;
  };

  const int pairs = 12;
  for (int rep = 0; rep < pairs; ++rep) {
    const SpectralField xc = random_pair_field(rep, 0);
    const SpectralField yc = random_pair_field(rep, 1);
    const GridField xg = plan.synthesize(xc);
    const GridField yg = plan.synthesize(yc);
    GridField diff(xg.dim, xg.points_per_axis);
    for (std::size_t i = 0; i < diff.values.size(); ++i)
      diff.values[i] = xg.values[i] - yg.values[i];
    const double denom = lq_norm(diff, m.sim.q);
    if (denom < 1e-12) continue;
    for (const double t : t_grid) {
      if (!m.drift.is_zero()) {
        GridField df(xg.dim, xg.points_per_axis);
        for (std::size_t i = 0; i < df.values.size(); ++i)
          df.values[i] = m.drift(xg.values[i]) - m.drift(yg.values[i]);
        const SpectralField sf = apply_semigroup(plan.analyze(df), t);
        s.c_F = std::max(s.c_F, lq_norm(plan.synthesize(sf), m.sim.q) / denom);
      }
      if (!m.diffusion.is_zero()) {
        FiniteRankOperator G;
        for (int n = 0; n < noise.mode_count(); ++n) {
          GridField col = apply_G_mode(xg, n, m.diffusion, noise);
          const GridField coly = apply_G_mode(yg, n, m.diffusion, noise);
          for (std::size_t i = 0; i < col.values.size(); ++i) col.values[i] -= coly.values[i];
          SpectralField cc = apply_semigroup(plan.analyze(col), t);
          G.add_column(n, plan.synthesize(cc));
        }
        s.c_G = std::max(s.c_G,
                         gamma_norm_mc(G, m.sim.q, 200, m.sim.master_seed + rep).estimate / denom);
      }
    }
  }
  if (s.c_F > 0.0 || s.c_G > 0.0) {
    s.weight = contraction_weight_for(s.c_F, s.c_G, m.sim.horizon, 0.5);
    s.factor_at_weight = contraction_factor(s.weight, s.c_F, s.c_G, m.sim.horizon);
  }
  return s;
}

struct BuildOutput {
  EnsembleData ens;
  // picard aggregation: sum over paths of ||diff||_q^p per iteration and time
  std::vector<std::vector<double>> picard_p_sums;
  std::vector<double> full_times;
  PicardSetup picard;
};

BuildOutput build_ensemble(const ExperimentManifest& m, int modes_per_axis, int workers,
                           const std::vector<double>& snapshot_times) {
  BuildOutput out;
  const int paths = m.sim.ensemble_size;
  SimConfig cfg = m.sim;
  cfg.modes_per_axis = modes_per_axis;
  const NoiseSpec noise = noise_at_resolution(m.noise, std::min(m.noise.modes_per_axis,
                                                                modes_per_axis));
  const EigenSystem basis(cfg.dim, cfg.modes_per_axis);
  const SpectralField X0 = m.initial.build(basis);

  out.ens.dim = cfg.dim;
  out.ens.modes_per_axis = cfg.modes_per_axis;
  out.ens.horizon = cfg.horizon;
  out.ens.master_seed = cfg.master_seed;
  out.ens.times = snapshot_times;
  out.ens.attempted_paths = paths;

  if (cfg.scheme == SimConfig::Scheme::picard) out.picard = picard_setup(m);

  const int nk = basis.mode_count();
  const std::size_t row = snapshot_times.size() * static_cast<std::size_t>(nk);
  std::vector<std::vector<double>> slots(static_cast<std::size_t>(paths));
  std::vector<char> blown(static_cast<std::size_t>(paths), 0);
  std::vector<std::vector<std::vector<double>>> picard_slots(
      cfg.scheme == SimConfig::Scheme::picard ? static_cast<std::size_t>(paths) : 0);

  // snapshot step indices
  std::vector<int> snap_steps(snapshot_times.size());
  for (std::size_t i = 0; i < snapshot_times.size(); ++i) {
    const double t = snapshot_times[i];
    const int s = static_cast<int>(std::llround(t / cfg.dt()));
    if (s < 0 || s > cfg.steps || std::abs(s * cfg.dt() - t) > 1e-9 * std::max(1.0, cfg.horizon))
      throw std::invalid_argument("snapshot time " + fmtg(t) + " off the solver grid");
    snap_steps[i] = s;
  }

  parallel_for(paths, workers, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t pa = lo; pa < hi; ++pa) {
      const WienerPath W = sample_wiener_increments(noise, cfg.steps, cfg.horizon,
                                                    cfg.master_seed,
                                                    static_cast<std::uint64_t>(pa));
      try {
        SolutionPath path;
        if (cfg.scheme == SimConfig::Scheme::ouExact) {
          path = ou_exact_solve(cfg, X0, W, noise);
        } else if (cfg.scheme == SimConfig::Scheme::picard) {
          auto [p, rep] = picard_solve(cfg, X0, W, noise, m.drift, m.diffusion,
                                       out.picard.weight, m.plan.picard_iterations);
          path = std::move(p);
          picard_slots[static_cast<std::size_t>(pa)] = std::move(rep.diff_p_norms);
        } else {
          path = exp_euler_solve(cfg, X0, W, noise, m.drift, m.diffusion);
        }
        auto& slot = slots[static_cast<std::size_t>(pa)];
        slot.resize(row);
        for (std::size_t i = 0; i < snap_steps.size(); ++i) {
          const auto& c = path.snapshots[static_cast<std::size_t>(snap_steps[i])].coeffs;
          std::copy(c.begin(), c.end(),
                    slot.begin() + static_cast<std::ptrdiff_t>(i * static_cast<std::size_t>(nk)));
        }
      } catch (const SolverBlowupError&) {
        blown[static_cast<std::size_t>(pa)] = 1;
      }
    }
  });

  for (int pa = 0; pa < paths; ++pa) {
    if (blown[static_cast<std::size_t>(pa)]) {
      ++out.ens.blowup_count;
      continue;
    }
    out.ens.path_ids.push_back(static_cast<std::uint64_t>(pa));
    out.ens.coefficients.push_back(std::move(slots[static_cast<std::size_t>(pa)]));
  }

  if (cfg.scheme == SimConfig::Scheme::picard) {
    out.full_times.resize(static_cast<std::size_t>(cfg.steps) + 1);
    for (int s = 0; s <= cfg.steps; ++s) out.full_times[s] = s * cfg.dt();
    for (int pa = 0; pa < paths; ++pa) {
      if (blown[static_cast<std::size_t>(pa)]) continue;
      const auto& tbl = picard_slots[static_cast<std::size_t>(pa)];
      if (out.picard_p_sums.empty())
        out.picard_p_sums.assign(tbl.size(),
                                 std::vector<double>(static_cast<std::size_t>(cfg.steps) + 1, 0.0));
      for (std::size_t it = 0; it < tbl.size(); ++it)
        for (std::size_t s = 0; s < tbl[it].size(); ++s) out.picard_p_sums[it][s] += tbl[it][s];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// checks

ordered_json check_per_mode_variance(const ExperimentManifest& m, const EnsembleData& ens,
                                     const std::filesystem::path& dir,
                                     const std::string& mhash) {
  const EigenSystem basis(ens.dim, ens.modes_per_axis);
  const NoiseSpec noise = noise_at_resolution(m.noise, std::min(m.noise.modes_per_axis,
                                                                ens.modes_per_axis));
  const SpectralField X0 = m.initial.build(basis);
  const int ti = static_cast<int>(ens.times.size()) - 1;
  const double T = ens.times.back();
  const int n = ens.path_count();

  int failures = 0;
  std::vector<std::vector<std::string>> rows;
  for (int k = 0; k < basis.mode_count(); ++k) {
    const double lam = basis.lambda(k);
    const double lq = noise.eigenvalue(k);
    const double mean_exact = std::exp(-lam * T) * X0[k];
    const double var_exact = lq * (1.0 - std::exp(-2.0 * lam * T)) / (2.0 * lam);
    double acc = 0.0;
    for (int pa = 0; pa < n; ++pa) {
      const double d = ens.snapshot(pa, ti)[static_cast<std::size_t>(k)] - mean_exact;
      acc += d * d;
    }
    const double var_emp = acc / std::max(n - 1, 1);
    const double se = var_exact * std::sqrt(2.0 / std::max(n - 1, 1));
    const bool ok = std::abs(var_emp - var_exact) <= 4.0 * se;
    if (!ok) ++failures;
    rows.push_back({std::to_string(k + 1), fmtg(lam), fmtg(lq), fmtg(var_emp), fmtg(var_exact),
                    fmtg(se), ok ? "1" : "0"});
  }
  write_csv(dir / "per_mode_variance.csv", mhash,
            {"mode", "lambda", "lambda_q", "empirical_var", "exact_var", "se", "ok"}, rows);
  ordered_json j;
  j["name"] = "per_mode_variance";
  j["modes"] = basis.mode_count();
  j["failures"] = failures;
  j["pass"] = failures == 0;
  return j;
}

ordered_json check_convergence(const ExperimentManifest& m, int workers,
                               const std::filesystem::path& dir, const std::string& mhash) {
  std::vector<int> Ms = m.plan.convergence_steps;
  std::sort(Ms.begin(), Ms.end());
  const int M0 = Ms.front();
  for (const int M : Ms)
    if (M % M0 != 0 || ((M / M0) & (M / M0 - 1)) != 0)
      throw std::invalid_argument("convergence_steps must be dyadic multiples of the smallest");

  const int paths = m.sim.ensemble_size;
  const EigenSystem basis(m.sim.dim, m.sim.modes_per_axis);
  const SpectralField X0 = m.initial.build(basis);
  const NoiseSpec noise = noise_at_resolution(m.noise, std::min(m.noise.modes_per_axis,
                                                                m.sim.modes_per_axis));

  std::vector<std::vector<double>> err2(static_cast<std::size_t>(paths),
                                        std::vector<double>(Ms.size(), 0.0));
  parallel_for(paths, workers, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t pa = lo; pa < hi; ++pa) {
      const WienerPath W0 = sample_wiener_increments(noise, M0, m.sim.horizon, m.sim.master_seed,
                                                     static_cast<std::uint64_t>(pa));
      for (std::size_t mi = 0; mi < Ms.size(); ++mi) {
        const int M = Ms[mi];
        const WienerPath W = M == M0 ? W0 : refine_path(W0, M / M0);
        SimConfig cfg = m.sim;
        cfg.steps = M;
        const SolutionPath euler = exp_euler_solve(cfg, X0, W, noise, m.drift, m.diffusion);
        const SolutionPath exact = ou_exact_solve(cfg, X0, W, noise);
        double d2 = 0.0;
        const auto& e = euler.snapshots.back().coeffs;
        const auto& o = exact.snapshots.back().coeffs;
        for (std::size_t k = 0; k < e.size(); ++k) d2 += (e[k] - o[k]) * (e[k] - o[k]);
        err2[static_cast<std::size_t>(pa)][mi] = d2;
      }
    }
  });

  std::vector<double> dist(Ms.size(), 0.0);
  for (int pa = 0; pa < paths; ++pa)
    for (std::size_t mi = 0; mi < Ms.size(); ++mi) dist[mi] += err2[static_cast<std::size_t>(pa)][mi];
  for (auto& d : dist) d = std::sqrt(d / paths);

  std::vector<double> orders;
  for (std::size_t i = 1; i < Ms.size(); ++i)
    orders.push_back(std::log2(dist[i - 1] / dist[i]) / std::log2(double(Ms[i]) / Ms[i - 1]));

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < Ms.size(); ++i)
    rows.push_back({std::to_string(Ms[i]), fmtg(dist[i]),
                    i == 0 ? "" : fmtg(orders[i - 1])});
  write_csv(dir / "convergence.csv", mhash, {"steps", "l2_distance", "order"}, rows);

  double min_order = orders.empty() ? 0.0 : *std::min_element(orders.begin(), orders.end());
  ordered_json j;
  j["name"] = "convergence_order";
  j["steps"] = Ms;
  j["distances"] = dist;
  j["orders"] = orders;
  j["min_order"] = min_order;
  j["pass"] = min_order >= 0.9;
  return j;
}

ordered_json check_hoelder(const ExperimentManifest& m, const EnsembleData& ens,
                           const std::filesystem::path& dir, const std::string& mhash) {
  LagSpec lags;
  lags.anchors = m.hoelder_anchors();
  for (const int l : m.plan.hoelder_lag_steps) lags.lags.push_back(l * m.sim.dt());
  const double p = m.plan.hoelder_moment_p;
  const int ng_e = 2 * ens.modes_per_axis;
  const int ng_c = 4 * ens.modes_per_axis;

  ordered_json j;
  j["name"] = "hoelder_window";
  bool all_ok = true;
  std::vector<std::vector<std::string>> rows;

  if (m.plan.hoelder_c0) {
    const HolderEstimate est = temporal_holder_estimate(ens, p, NormKind::Choelder, 0.0, lags,
                                                        m.sim.q, ng_c, m.sim.master_seed);
    const bool ok = est.reported && est.exponent >= 0.35 && est.exponent <= 0.60;
    all_ok = all_ok && ok;
    rows.push_back({"C0", "0", fmtg(est.exponent), fmtg(est.std_error), fmtg(est.r_squared),
                    est.reported ? "1" : "0", fmtg(est.exponent), ok ? "1" : "0"});
    ordered_json e;
    e["norm"] = "C0";
    e["exponent"] = est.exponent;
    e["std_error"] = est.std_error;
    e["r_squared"] = est.r_squared;
    e["reported"] = est.reported;
    e["ok"] = ok;
    j["c0"] = e;
  }

  ordered_json windows = ordered_json::array();
  for (const double theta : m.plan.hoelder_thetas) {
    const HolderEstimate est = temporal_holder_estimate(ens, p, NormKind::Etheta, theta, lags,
                                                        m.sim.q, ng_e, m.sim.master_seed);
    const double sum = est.exponent + theta / 2.0;
    const bool ok = est.reported && sum >= 0.30 && sum <= 0.60;
    all_ok = all_ok && ok;
    rows.push_back({"Etheta", fmtg(theta), fmtg(est.exponent), fmtg(est.std_error),
                    fmtg(est.r_squared), est.reported ? "1" : "0", fmtg(sum), ok ? "1" : "0"});
    ordered_json e;
    e["theta"] = theta;
    e["exponent"] = est.exponent;
    e["std_error"] = est.std_error;
    e["r_squared"] = est.r_squared;
    e["reported"] = est.reported;
    e["window_sum"] = sum;
    e["ok"] = ok;
    windows.push_back(e);
  }
  j["windows"] = windows;
  write_csv(dir / "hoelder_temporal.csv", mhash,
            {"norm", "theta", "exponent", "std_error", "r_squared", "reported", "window_sum", "ok"},
            rows);
  j["pass"] = all_ok;
  return j;
}

ordered_json check_sweep(const ExperimentManifest& m, const std::vector<EnsembleData>& ensembles,
                         const std::filesystem::path& dir, const std::string& mhash) {
  const auto rows = spatial_regularity_sweep(ensembles, m.plan.sweep_thetas, m.sim.q);

  // additive oracle: exact OU variance partial sums under the same rule
  const bool oracle_defined = m.drift.is_zero() && m.diffusion.is_constant() &&
                              m.initial.kind == InitialSpec::Kind::zero;
  const double gc = m.diffusion.is_constant() ? m.diffusion(0.0) : 0.0;

  bool all_ok = true;
  std::vector<std::vector<std::string>> csv;
  ordered_json verdicts = ordered_json::array();
  for (const auto& row : rows) {
    ordered_json v;
    v["theta"] = row.theta;
    v["mean_sq"] = row.mean_sq_norm;
    v["ratios"] = row.ratios;
    v["verdict"] = row.bounded ? "bounded" : "divergent";
    bool ok = true;
    if (oracle_defined) {
      std::vector<double> oracle;
      for (const int N : row.resolutions) {
        const EigenSystem basis(m.sim.dim, N);
        const NoiseSpec noise = noise_at_resolution(m.noise, std::min(m.noise.modes_per_axis, N));
        double s = 0.0;
        for (int k = 0; k < basis.mode_count(); ++k) {
          const double lam = basis.lambda(k);
          s += std::pow(lam, row.theta) * gc * gc * noise.eigenvalue(k) *
               (1.0 - std::exp(-2.0 * lam * m.sim.horizon)) / (2.0 * lam);
        }
        oracle.push_back(s);
      }
      const bool oracle_bounded = oracle.back() / oracle[oracle.size() - 2] <= 1.15;
      v["oracle_mean_sq"] = oracle;
      v["oracle_verdict"] = oracle_bounded ? "bounded" : "divergent";
      ok = oracle_bounded == row.bounded;
    }
    v["ok"] = ok;
    all_ok = all_ok && ok;
    verdicts.push_back(v);
    for (std::size_t i = 0; i < row.resolutions.size(); ++i)
      csv.push_back({fmtg(row.theta), std::to_string(row.resolutions[i]),
                     fmtg(row.mean_sq_norm[i]), i == 0 ? "" : fmtg(row.ratios[i - 1]),
                     row.bounded ? "bounded" : "divergent"});
  }
  write_csv(dir / "spatial_sweep.csv", mhash,
            {"theta", "resolution", "mean_sq_etheta", "ratio", "verdict"}, csv);
  ordered_json j;
  j["name"] = "spatial_ceiling";
  j["rows"] = verdicts;
  j["pass"] = all_ok;
  return j;
}

ordered_json check_moment(const ExperimentManifest& m, const EnsembleData& ens,
                          const std::filesystem::path& dir, const std::string& mhash) {
  const EigenSystem basis(ens.dim, ens.modes_per_axis);
  const SpectralField X0 = m.initial.build(basis);
  const MomentReport rep = moment_bound_check(ens, m.sim.p, m.sim.theta, X0, m.sim.q,
                                              2 * ens.modes_per_axis);
  write_csv(dir / "moment_bound.csv", mhash,
            {"sup_moment", "bound_ratio", "blowups", "blowup_fraction", "pass"},
            {{fmtg(rep.sup_moment), fmtg(rep.bound_ratio), std::to_string(rep.blowup_count),
              fmtg(rep.blowup_fraction), rep.pass ? "1" : "0"}});
  ordered_json j;
  j["name"] = "moment_bound";
  j["sup_moment"] = rep.sup_moment;
  j["bound_ratio"] = rep.bound_ratio;
  j["blowup_count"] = rep.blowup_count;
  j["pass"] = rep.pass;
  return j;
}

ordered_json check_lp_continuity(const ExperimentManifest& m, const EnsembleData& ens,
                                 const std::filesystem::path& dir, const std::string& mhash) {
  const auto rep = lp_continuity_check(ens, m.sim.p, m.sim.theta, m.continuity_pairs(), m.sim.q,
                                       2 * ens.modes_per_axis);
  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < rep.gaps.size(); ++i)
    rows.push_back({fmtg(rep.gaps[i]), fmtg(rep.moments[i])});
  write_csv(dir / "lp_continuity.csv", mhash, {"gap", "p_moment"}, rows);
  ordered_json j;
  j["name"] = "lp_continuity";
  j["monotone"] = rep.monotone;
  j["small_large_ratio"] = rep.small_large_ratio;
  j["pass"] = rep.pass;
  return j;
}

ordered_json check_picard(const ExperimentManifest& m, const BuildOutput& build,
                          const std::filesystem::path& dir, const std::string& mhash) {
  const int n = static_cast<int>(build.ens.path_count());
  std::vector<double> distances;
  for (const auto& per_time : build.picard_p_sums) {
    double d = 0.0;
    for (std::size_t s = 0; s < per_time.size(); ++s) {
      const double mean_p = per_time[s] / std::max(n, 1);
      d = std::max(d, std::exp(-build.picard.weight * build.full_times[s]) *
                          std::pow(mean_p, 1.0 / m.sim.p));
    }
    distances.push_back(d);
  }
  std::vector<double> ratios;
  for (std::size_t i = 1; i < distances.size(); ++i)
    ratios.push_back(distances[i] / distances[i - 1]);

  std::vector<std::vector<std::string>> rows;
  for (std::size_t i = 0; i < distances.size(); ++i)
    rows.push_back({std::to_string(i + 1), fmtg(distances[i]),
                    i == 0 ? "" : fmtg(ratios[i - 1])});
  write_csv(dir / "picard_decay.csv", mhash, {"iteration", "weighted_distance", "ratio"}, rows);

  bool decay_ok = !ratios.empty();
  for (const double r : ratios) decay_ok = decay_ok && r <= 0.9;
  ordered_json j;
  j["name"] = "picard_decay";
  j["weight"] = build.picard.weight;
  j["contraction_factor"] = build.picard.factor_at_weight;
  j["fitted_c_F"] = build.picard.c_F;
  j["fitted_c_G"] = build.picard.c_G;
  j["distances"] = distances;
  j["ratios"] = ratios;
  j["pass"] = decay_ok;
  return j;
}

std::vector<StepIntegrand> make_integrand_batch(const ExperimentManifest& m, int count) {
  const int pieces = 16;
  const int ng = 64;
  const int noise_modes = m.noise.modes_per_axis;
  const EigenSystem col_basis(1, 8);
  std::vector<StepIntegrand> batch;
  for (int i = 0; i < count; ++i) {
    StepIntegrand phi;
    for (int pc = 0; pc <= pieces; ++pc)
      phi.piece_times.push_back(m.sim.horizon * pc / pieces);
    const int rank = 1 + i % 4;
    for (int pc = 0; pc < pieces; ++pc) {
      FiniteRankOperator op;
      for (int c = 0; c < rank; ++c) {
        SpectralField col(col_basis);
        for (int k = 0; k < 8; ++k)
          col[k] = rng::normal(m.sim.master_seed, rng::kBurkholder,
                               static_cast<std::uint64_t>(i),
                               static_cast<std::uint32_t>(pc * 8 + c),
                               static_cast<std::uint32_t>(k)) /
                   (k + 1.0);
        op.add_column((i * 3 + c * 5 + pc) % noise_modes, synthesize(col, ng));
      }
      phi.pieces.push_back(std::move(op));
    }
    if (i % 5 == 4) {
      phi.modulation = StepIntegrand::Modulation::tanh_w;
      phi.modulation_mode = i % noise_modes;
    }
    batch.push_back(std::move(phi));
  }
  return batch;
}

ordered_json check_burkholder(const ExperimentManifest& m, const std::filesystem::path& dir,
                              const std::string& mhash) {
  const auto batch = make_integrand_batch(m, m.plan.burkholder_integrands);
  const int n_paths = m.sim.ensemble_size;
  const int gamma_samples = 400;

  ordered_json j;
  j["name"] = "burkholder";
  bool all_pass = true;
  std::vector<std::vector<std::string>> rows;
  for (const double q : {2.0, 4.0}) {
    const BurkholderReport rep = burkholder_check(batch, m.sim.p, q, m.noise.modes_per_axis,
                                                  m.sim.steps, m.sim.horizon, n_paths,
                                                  gamma_samples, m.sim.master_seed);
    for (std::size_t i = 0; i < rep.ratios.size(); ++i)
      rows.push_back({fmtg(q), std::to_string(i), fmtg(rep.ratios[i])});
    ordered_json e;
    e["q"] = q;
    e["median_ratio"] = rep.median_ratio;
    e["max_ratio"] = rep.max_ratio;
    e["pass"] = rep.pass;
    j["batch_q" + std::to_string(static_cast<int>(q))] = e;
    all_pass = all_pass && rep.pass;
  }

  // constant rank-1 family: scaled copies must give identical ratios under
  // the common Wiener ensemble (exact homogeneity of both sides)
  std::vector<StepIntegrand> family;
  for (const double scale : {0.5, 1.0, 2.0, 4.0}) {
    StepIntegrand phi;
    phi.piece_times = {0.0, m.sim.horizon};
    FiniteRankOperator op;
    SpectralField x(EigenSystem(1, 8));
    for (int k = 0; k < 8; ++k) x[k] = scale / ((k + 1.0) * (k + 1.0));
    op.add_column(0, synthesize(x, 64));
    phi.pieces.push_back(std::move(op));
    family.push_back(std::move(phi));
  }
  const BurkholderReport fam = burkholder_check(family, m.sim.p, 2.0, m.noise.modes_per_axis,
                                                m.sim.steps, m.sim.horizon, n_paths,
                                                gamma_samples, m.sim.master_seed);
  double spread = 0.0;
  for (const double r : fam.ratios)
    spread = std::max(spread, std::abs(r - fam.ratios[0]) / fam.ratios[0]);
  const bool family_ok = spread < 1e-9;
  j["family_ratios"] = fam.ratios;
  j["family_spread"] = spread;
  j["family_ok"] = family_ok;
  all_pass = all_pass && family_ok;

  write_csv(dir / "burkholder.csv", mhash, {"q", "integrand", "ratio"}, rows);
  j["pass"] = all_pass;
  return j;
}

ordered_json check_factorization(const ExperimentManifest& m, int workers,
                                 const std::filesystem::path& dir, const std::string& mhash) {
  std::vector<int> Ms = m.plan.factorization_steps;
  std::sort(Ms.begin(), Ms.end());
  const int M0 = Ms.front();
  for (const int M : Ms)
    if (M % M0 != 0 || ((M / M0) & (M / M0 - 1)) != 0)
      throw std::invalid_argument("factorization_steps must be dyadic multiples of the smallest");

  const int paths = m.sim.ensemble_size;
  const EigenSystem basis(m.sim.dim, m.sim.modes_per_axis);
  const NoiseSpec noise = noise_at_resolution(m.noise, std::min(m.noise.modes_per_axis,
                                                                m.sim.modes_per_axis));

  std::vector<std::vector<double>> num(static_cast<std::size_t>(paths),
                                       std::vector<double>(Ms.size(), 0.0));
  std::vector<std::vector<double>> den = num;
  parallel_for(paths, workers, [&](std::int64_t lo, std::int64_t hi) {
    for (std::int64_t pa = lo; pa < hi; ++pa) {
      const WienerPath W0 = sample_wiener_increments(noise, M0, m.sim.horizon, m.sim.master_seed,
                                                     static_cast<std::uint64_t>(pa));
      for (std::size_t mi = 0; mi < Ms.size(); ++mi) {
        const int M = Ms[mi];
        const WienerPath W = M == M0 ? W0 : refine_path(W0, M / M0);
        // additive case: the state path only supplies times and the basis
        SolutionPath X;
        X.path_id = static_cast<std::uint64_t>(pa);
        X.times.resize(static_cast<std::size_t>(M) + 1);
        for (int s = 0; s <= M; ++s) X.times[s] = m.sim.horizon * s / M;
        X.snapshots.assign(static_cast<std::size_t>(M) + 1, SpectralField(basis));
        const auto direct = stochastic_convolution_direct(X, m.diffusion, W, noise);
        const auto fact = stochastic_convolution_factorized(X, m.diffusion, W, noise, m.sim.alpha);
        double d2 = 0.0, n2 = 0.0;
        const auto& dc = direct.back().coeffs;
        const auto& fc = fact.back().coeffs;
        for (std::size_t k = 0; k < dc.size(); ++k) {
          d2 += (fc[k] - dc[k]) * (fc[k] - dc[k]);
          n2 += dc[k] * dc[k];
        }
        num[static_cast<std::size_t>(pa)][mi] = d2;
        den[static_cast<std::size_t>(pa)][mi] = n2;
      }
    }
  });

  std::vector<double> rel(Ms.size(), 0.0);
  for (std::size_t mi = 0; mi < Ms.size(); ++mi) {
    double n2 = 0.0, d2 = 0.0;
    for (int pa = 0; pa < paths; ++pa) {
      n2 += num[static_cast<std::size_t>(pa)][mi];
      d2 += den[static_cast<std::size_t>(pa)][mi];
    }
    rel[mi] = std::sqrt(n2 / d2);
  }

  // scalar Beta identity at the finest grid: the composed product weights
  // reproduce sin(pi a)/pi Int (t-r)^{a-1} (r-s)^{-a} dr = 1
  const int Mb = Ms.back();
  const double dtb = m.sim.horizon / Mb;
  const double a = m.sim.alpha;
  std::vector<double> w(static_cast<std::size_t>(Mb) + 1, 0.0), v(w);
  for (int l = 1; l <= Mb; ++l) {
    w[l] = (std::pow(l * dtb, a) - std::pow((l - 1) * dtb, a)) / a;
    v[l] = (std::pow(l * dtb, 1.0 - a) - std::pow((l - 1) * dtb, 1.0 - a)) / ((1.0 - a) * dtb);
  }
  double beta_err = 0.0;
  const double front = std::sin(3.14159265358979323846 * a) / 3.14159265358979323846;
  for (const int i : {Mb / 4, Mb / 2, 3 * Mb / 4}) {
    double c = 0.0;
    for (int jj = i + 1; jj < Mb; ++jj) c += w[Mb - jj] * v[jj - i];
    beta_err = std::max(beta_err, std::abs(front * c - 1.0));
  }

  std::vector<std::vector<std::string>> rows;
  for (std::size_t mi = 0; mi < Ms.size(); ++mi)
    rows.push_back({std::to_string(Ms[mi]), fmtg(rel[mi])});
  write_csv(dir / "factorization.csv", mhash, {"steps", "relative_distance"}, rows);

  bool monotone = true;
  for (std::size_t i = 1; i < rel.size(); ++i)
    if (rel[i] > 1.10 * rel[i - 1]) monotone = false;
  ordered_json j;
  j["name"] = "factorization_distance";
  j["steps"] = Ms;
  j["relative_distance"] = rel;
  j["final_distance"] = rel.back();
  j["monotone"] = monotone;
  j["beta_identity_error"] = beta_err;
  j["pass"] = monotone && rel.back() <= 0.05 && beta_err <= 1e-3;
  return j;
}

} // namespace

std::filesystem::path default_output_root() {
  if (const char* env = std::getenv("SHESIM_OUT")) return env;
  return "shesim-out";
}

RunResult run_experiment(const ExperimentManifest& manifest, int workers) {
  RunResult result;
  const auto violations = manifest.validate();
  if (!violations.empty()) {
    result.exit_code = 2;
    result.messages = violations;
    return result;
  }

  const std::filesystem::path root = manifest.output_dir.empty()
                                         ? default_output_root()
                                         : std::filesystem::path(manifest.output_dir);
  const std::filesystem::path dir = root / manifest.name;
  result.artifact_dir = dir;

  try {
    std::filesystem::create_directories(dir / "tables");
    const std::string mhash = manifest_hash(manifest);
    write_text_file(dir / "manifest.txt", serialize_manifest_text(manifest));
    write_text_file(dir / "manifest.json", serialize_manifest_json(manifest));

    const auto snapshot_times = manifest.required_snapshot_times();
    BuildOutput build = build_ensemble(manifest, manifest.sim.modes_per_axis, workers,
                                       snapshot_times);
    export_ensemble(build.ens, dir / "ensemble.bin");

    if (manifest.plan.dump_noise) {
      const NoiseSpec noise = noise_at_resolution(
          manifest.noise, std::min(manifest.noise.modes_per_axis, manifest.sim.modes_per_axis));
      const int dumps = std::min(4, manifest.sim.ensemble_size);
      for (int pa = 0; pa < dumps; ++pa)
        dump_wiener(sample_wiener_increments(noise, manifest.sim.steps, manifest.sim.horizon,
                                             manifest.sim.master_seed,
                                             static_cast<std::uint64_t>(pa)),
                    dir / ("noise_path" + std::to_string(pa) + ".bin"));
    }

    ordered_json checks = ordered_json::array();
    const auto tables = dir / "tables";

    if (manifest.plan.per_mode_variance)
      checks.push_back(check_per_mode_variance(manifest, build.ens, tables, mhash));
    if (!manifest.plan.convergence_steps.empty())
      checks.push_back(check_convergence(manifest, workers, tables, mhash));
    if (manifest.plan.hoelder_temporal)
      checks.push_back(check_hoelder(manifest, build.ens, tables, mhash));
    if (!manifest.plan.sweep_resolutions.empty()) {
      std::vector<EnsembleData> ensembles;
      for (const int N : manifest.plan.sweep_resolutions) {
        BuildOutput b = build_ensemble(manifest, N, workers, {0.0, manifest.sim.horizon});
        export_ensemble(b.ens, dir / ("ensemble_N" + std::to_string(N) + ".bin"));
        ensembles.push_back(std::move(b.ens));
      }
      checks.push_back(check_sweep(manifest, ensembles, tables, mhash));
    }
    if (manifest.plan.moment_bound)
      checks.push_back(check_moment(manifest, build.ens, tables, mhash));
    if (manifest.plan.lp_continuity)
      checks.push_back(check_lp_continuity(manifest, build.ens, tables, mhash));
    if (manifest.sim.scheme == SimConfig::Scheme::picard && manifest.plan.picard_iterations > 0)
      checks.push_back(check_picard(manifest, build, tables, mhash));
    if (manifest.plan.burkholder_integrands > 0)
      checks.push_back(check_burkholder(manifest, tables, mhash));
    if (!manifest.plan.factorization_steps.empty())
      checks.push_back(check_factorization(manifest, workers, tables, mhash));

    bool all_pass = true;
    for (const auto& c : checks) all_pass = all_pass && c.at("pass").get<bool>();

    ordered_json verdicts;
    verdicts["schema"] = 1;
    verdicts["name"] = manifest.name;
    verdicts["manifest_hash"] = mhash;
    verdicts["ensemble_paths"] = build.ens.path_count();
    verdicts["blowups"] = build.ens.blowup_count;
    verdicts["checks"] = checks;
    verdicts["pass"] = all_pass;
    result.verdicts_json = verdicts.dump(2) + "\n";
    write_text_file(dir / "verdicts.json", result.verdicts_json);
    result.summary_hash = hash_hex(result.verdicts_json);
    result.exit_code = all_pass ? 0 : 1;
    return result;
  } catch (const std::exception& e) {
    result.messages.push_back(e.what());
    std::error_code ec;
    std::filesystem::remove_all(dir, ec); // no partial artifacts
    result.exit_code = 3;
    return result;
  }
}

int replay_check(const std::filesystem::path& artifact_dir, const std::string& check_name) {
  const ExperimentManifest manifest = load_manifest(artifact_dir / "manifest.txt");
  const std::string mhash = manifest_hash(manifest);
  std::ifstream vf(artifact_dir / "verdicts.json");
  if (!vf) throw std::runtime_error("replay: no verdicts.json in " + artifact_dir.string());
  std::stringstream ss;
  ss << vf.rdbuf();
  const ordered_json stored = ordered_json::parse(ss.str());

  const std::filesystem::path tmp = artifact_dir / "replay-tables";
  std::filesystem::create_directories(tmp);

  ordered_json fresh;
  if (check_name == "hoelder_window") {
    const EnsembleData ens = import_ensemble(artifact_dir / "ensemble.bin");
    fresh = check_hoelder(manifest, ens, tmp, mhash);
  } else if (check_name == "moment_bound") {
    const EnsembleData ens = import_ensemble(artifact_dir / "ensemble.bin");
    fresh = check_moment(manifest, ens, tmp, mhash);
  } else if (check_name == "lp_continuity") {
    const EnsembleData ens = import_ensemble(artifact_dir / "ensemble.bin");
    fresh = check_lp_continuity(manifest, ens, tmp, mhash);
  } else if (check_name == "per_mode_variance") {
    const EnsembleData ens = import_ensemble(artifact_dir / "ensemble.bin");
    fresh = check_per_mode_variance(manifest, ens, tmp, mhash);
  } else if (check_name == "spatial_ceiling") {
    std::vector<EnsembleData> ensembles;
    for (const int N : manifest.plan.sweep_resolutions)
      ensembles.push_back(import_ensemble(artifact_dir / ("ensemble_N" + std::to_string(N) + ".bin")));
    fresh = check_sweep(manifest, ensembles, tmp, mhash);
  } else {
    throw std::invalid_argument(
        "replay: check '" + check_name +
        "' is not replayable from exports; replayable checks: hoelder_window, moment_bound, "
        "lp_continuity, per_mode_variance, spatial_ceiling");
  }

  for (const auto& c : stored.at("checks")) {
    if (c.at("name") == check_name) return c == fresh ? 0 : 1;
  }
  return 1; // check absent from the stored verdicts
}

} // namespace shesim
