#include "shesim/solver.hpp"

#include <algorithm>
#include <cmath>

#include "shesim/norms.hpp"
#include "shesim/operators.hpp"
#include "shesim/rng.hpp"

namespace shesim {

namespace {

constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr double kBlowupSentinel = 1e12;

// Maps a noise-lattice flat index to the state-lattice flat index, or -1
// when the noise mode lies outside the state truncation.
int map_mode(const EigenSystem& noise_basis, const EigenSystem& state_basis, int flat) {
  if (noise_basis.modes_per_axis() == state_basis.modes_per_axis()) return flat;
  const auto k = noise_basis.multi_index(flat);
  if (k[0] > state_basis.modes_per_axis()) return -1;
  if (state_basis.dim() == 2 && k[1] > state_basis.modes_per_axis()) return -1;
  return state_basis.flat_index(k[0], k[1]);
}

void check_blowup(std::span<const double> coeffs, int step) {
  for (std::size_t k = 0; k < coeffs.size(); ++k)
    if (!(std::abs(coeffs[k]) < kBlowupSentinel))
      throw SolverBlowupError(step, static_cast<int>(k), coeffs[k]);
}

// Shared per-step machinery for the mild-map recursions. Holds the plans
// and scratch buffers; evaluates drift and diffusion contributions in mode
// space with the dealiasing roundtrip (skipped where the nonlinearity makes
// it exact in mode space already).
class MildStepper {
public:
  MildStepper(const SimConfig& cfg, const NoiseSpec& spec, const ScalarFn& f, const ScalarFn& g)
      : cfg_(cfg), spec_(spec), f_(f), g_(g),
        state_basis_(cfg.dim, cfg.modes_per_axis),
        noise_basis_(spec.dim, spec.modes_per_axis),
        ng_(cfg.dealias_points(spec.modes_per_axis)),
        plan_(state_basis_, ng_),
        noise_plan_(noise_basis_, ng_),
        state_grid_(static_cast<std::size_t>(plan_count()), 0.0),
        noise_grid_(static_cast<std::size_t>(plan_count()), 0.0),
        work_grid_(static_cast<std::size_t>(plan_count()), 0.0),
        noise_coeffs_(static_cast<std::size_t>(noise_basis_.mode_count()), 0.0),
        mode_map_(static_cast<std::size_t>(noise_basis_.mode_count())),
        root_q_(static_cast<std::size_t>(noise_basis_.mode_count())) {
    for (int n = 0; n < noise_basis_.mode_count(); ++n) {
      mode_map_[n] = map_mode(noise_basis_, state_basis_, n);
      root_q_[n] = std::sqrt(spec.eigenvalue(n));
    }
    decay_.resize(static_cast<std::size_t>(state_basis_.mode_count()));
    for (int k = 0; k < state_basis_.mode_count(); ++k)
      decay_[k] = std::exp(-state_basis_.lambda(k) * cfg.dt());
  }

  const EigenSystem& state_basis() const { return state_basis_; }
  const DstPlan& plan() const { return plan_; }
  std::span<const double> decay() const { return decay_; }

  // dt * F(x) in mode space, accumulated into acc.
  void add_drift(std::span<const double> x, std::span<double> acc) {
    if (f_.is_zero()) return;
    if (f_.is_constant()) {
      // F(x) = b * indicator; analyze(б * ones) once
      synth_constant_drift(acc);
      return;
    }
    plan_.synthesize_into(x, state_grid_);
    for (auto& v : state_grid_) v = f_(v);
    plan_.analyze_into(state_grid_, work_coeffs());
    const double dt = cfg_.dt();
    for (int k = 0; k < state_basis_.mode_count(); ++k) acc[k] += dt * work_[k];
  }

  // G(x) dW_m in mode space, accumulated into acc.
  void add_diffusion(std::span<const double> x, const WienerPath& W, int m,
                     std::span<double> acc) {
    if (g_.is_zero()) return;
    const int nm = noise_basis_.mode_count();
    if (g_.is_constant()) {
      const double gc = g_(0.0);
      for (int n = 0; n < nm; ++n) {
        const int k = mode_map_[n];
        if (k >= 0) acc[k] += gc * root_q_[n] * W.increment(m, n);
      }
      return;
    }
    for (int n = 0; n < nm; ++n) noise_coeffs_[n] = root_q_[n] * W.increment(m, n);
    noise_plan_.synthesize_into(noise_coeffs_, noise_grid_);
    plan_.synthesize_into(x, state_grid_);
    for (std::size_t i = 0; i < noise_grid_.size(); ++i)
      noise_grid_[i] *= g_(state_grid_[i]);
    plan_.analyze_into(noise_grid_, work_coeffs());
    for (int k = 0; k < state_basis_.mode_count(); ++k) acc[k] += work_[k];
  }

private:
  int plan_count() const { return cfg_.dim == 1 ? ng_ : ng_ * ng_; }
  std::span<double> work_coeffs() {
    work_.resize(static_cast<std::size_t>(state_basis_.mode_count()));
    return work_;
  }
  void synth_constant_drift(std::span<double> acc) {
    if (!const_drift_ready_) {
      std::fill(work_grid_.begin(), work_grid_.end(), f_(0.0));
      const_drift_.resize(static_cast<std::size_t>(state_basis_.mode_count()));
      plan_.analyze_into(work_grid_, const_drift_);
      const_drift_ready_ = true;
    }
    const double dt = cfg_.dt();
    for (int k = 0; k < state_basis_.mode_count(); ++k) acc[k] += dt * const_drift_[k];
  }

  const SimConfig& cfg_;
  const NoiseSpec& spec_;
  const ScalarFn& f_;
  const ScalarFn& g_;
  EigenSystem state_basis_;
  EigenSystem noise_basis_;
  int ng_;
  DstPlan plan_;
  DstPlan noise_plan_;
  std::vector<double> state_grid_, noise_grid_, work_grid_;
  std::vector<double> noise_coeffs_;
  std::vector<double> work_;
  std::vector<double> const_drift_;
  bool const_drift_ready_ = false;
  std::vector<int> mode_map_;
  std::vector<double> root_q_;
  std::vector<double> decay_;
};

std::vector<double> grid_times(const SimConfig& cfg) {
  std::vector<double> t(static_cast<std::size_t>(cfg.steps) + 1);
  for (int m = 0; m <= cfg.steps; ++m) t[m] = cfg.horizon * m / cfg.steps;
  return t;
}

void require_consistent(const SimConfig& cfg, const SpectralField& X0, const WienerPath& W) {
  if (X0.basis.dim() != cfg.dim || X0.basis.modes_per_axis() != cfg.modes_per_axis)
    throw std::invalid_argument("solver: initial state basis does not match config");
  if (W.steps != cfg.steps || W.dim != cfg.dim)
    throw std::invalid_argument("solver: Wiener path grid does not match config");
  if (std::abs(W.horizon - cfg.horizon) > 1e-12 * std::max(1.0, cfg.horizon))
    throw std::invalid_argument("solver: Wiener path horizon does not match config");
}

} // namespace

std::vector<std::string> SimConfig::validate() const {
  std::vector<std::string> bad;
  if (horizon <= 0.0) bad.push_back("T must be positive");
  if (steps < 1) bad.push_back("steps must be >= 1");
  if (modes_per_axis < 1) bad.push_back("modes_per_axis must be >= 1");
  if (dim != 1 && dim != 2) bad.push_back("dim must be 1 or 2");
  if (q < 2.0) bad.push_back("q must be >= 2 (state space L^q with q >= 2)");
  if (p <= 2.0) bad.push_back("p must be > 2");
  if (!(alpha > 1.0 / p && alpha < 0.5))
    bad.push_back("alpha must lie strictly inside (1/p, 1/2) = (" + std::to_string(1.0 / p) +
                  ", 0.5), got " + std::to_string(alpha));
  if (ensemble_size < 1) bad.push_back("ensemble size must be >= 1");
  return bad;
}

SolutionPath exp_euler_solve(const SimConfig& cfg, const SpectralField& X0, const WienerPath& W,
                             const NoiseSpec& spec, const ScalarFn& f, const ScalarFn& g) {
  require_consistent(cfg, X0, W);
  MildStepper stepper(cfg, spec, f, g);
  const int nk = stepper.state_basis().mode_count();

  SolutionPath path;
  path.path_id = W.path_id;
  path.times = grid_times(cfg);
  path.snapshots.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  path.snapshots.push_back(X0);

  std::vector<double> cur = X0.coeffs;
  std::vector<double> base;
  for (int m = 0; m < cfg.steps; ++m) {
    base = cur; // F, G evaluate at X_m while cur accumulates the update
    stepper.add_drift(base, cur);
    stepper.add_diffusion(base, W, m, cur);
    for (int k = 0; k < nk; ++k) cur[k] *= stepper.decay()[k];
    check_blowup(cur, m + 1);
    path.snapshots.emplace_back(stepper.state_basis(), cur);
  }
  return path;
}

SolutionPath ou_exact_solve(const SimConfig& cfg, const SpectralField& X0, const WienerPath& W,
                            const NoiseSpec& spec) {
  require_consistent(cfg, X0, W);
  const EigenSystem state_basis(cfg.dim, cfg.modes_per_axis);
  const EigenSystem noise_basis(spec.dim, spec.modes_per_axis);
  if (spec.dim != cfg.dim)
    throw std::invalid_argument("ou_exact_solve: noise dimension does not match config");

  const int nk = state_basis.mode_count();
  const double dt = cfg.dt();

  // per state mode: decay, increment coupling c, residual sd
  std::vector<double> decay(nk), coupling(nk), residual_sd(nk), root_q(nk, 0.0);
  std::vector<int> noise_of_state(nk, -1);
  for (int n = 0; n < noise_basis.mode_count(); ++n) {
    const int k = map_mode(noise_basis, state_basis, n);
    if (k >= 0) {
      noise_of_state[k] = n;
      root_q[k] = std::sqrt(spec.eigenvalue(n));
    }
  }
  for (int k = 0; k < nk; ++k) {
    const double lam = state_basis.lambda(k);
    const double e = std::exp(-lam * dt);
    decay[k] = e;
    const double c = (1.0 - e) / (lam * dt);
    coupling[k] = c;
    const double var = (1.0 - e * e) / (2.0 * lam) - c * c * dt;
    residual_sd[k] = var > 0.0 ? std::sqrt(var) : 0.0;
  }

  SolutionPath path;
  path.path_id = W.path_id;
  path.times = grid_times(cfg);
  path.snapshots.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  path.snapshots.push_back(X0);

  std::vector<double> cur = X0.coeffs;
  for (int m = 0; m < cfg.steps; ++m) {
    for (int k = 0; k < nk; ++k) {
      double noise = 0.0;
      if (root_q[k] > 0.0) {
        const double xi = rng::normal(W.master_seed, rng::kOuResidual, W.path_id,
                                      static_cast<std::uint32_t>(m),
                                      state_basis.packed_id(k));
        noise = root_q[k] *
                (coupling[k] * W.increment(m, noise_of_state[k]) + residual_sd[k] * xi);
      }
      cur[k] = decay[k] * cur[k] + noise;
    }
    check_blowup(cur, m + 1);
    path.snapshots.emplace_back(state_basis, cur);
  }
  return path;
}

std::vector<SpectralField> deterministic_convolution(const SolutionPath& X, const ScalarFn& f,
                                                     ConvolutionRule rule) {
  if (X.snapshots.empty()) throw std::invalid_argument("deterministic_convolution: empty path");
  const EigenSystem& basis = X.snapshots.front().basis;
  const int nk = basis.mode_count();
  const int M = static_cast<int>(X.snapshots.size()) - 1;
  const double dt = M > 0 ? X.times[1] - X.times[0] : 0.0;

  std::vector<SpectralField> out(X.snapshots.size(), SpectralField(basis));
  if (f.is_zero() || M == 0) return out;

  const int ng = 2 * basis.modes_per_axis();
  const DstPlan plan(basis, ng);
  std::vector<double> decay(nk), cell(nk);
  for (int k = 0; k < nk; ++k) {
    const double lam = basis.lambda(k);
    decay[k] = std::exp(-lam * dt);
    cell[k] = rule == ConvolutionRule::leftPoint
                  ? dt
                  : (lam > 0.0 ? (1.0 - decay[k]) / lam : dt);
  }

  std::vector<double> cur(static_cast<std::size_t>(nk), 0.0);
  for (int m = 0; m < M; ++m) {
    const SpectralField Fm = plan.analyze(apply_F(plan.synthesize(X.snapshots[m]), f));
    if (rule == ConvolutionRule::leftPoint) {
      for (int k = 0; k < nk; ++k) cur[k] = decay[k] * (cur[k] + cell[k] * Fm[k]);
    } else {
      for (int k = 0; k < nk; ++k) cur[k] = decay[k] * cur[k] + cell[k] * Fm[k];
    }
    out[m + 1].coeffs = cur;
  }
  return out;
}

std::vector<SpectralField> stochastic_convolution_direct(const SolutionPath& X, const ScalarFn& g,
                                                         const WienerPath& W,
                                                         const NoiseSpec& spec) {
  if (X.snapshots.empty())
    throw std::invalid_argument("stochastic_convolution_direct: empty path");
  const EigenSystem& basis = X.snapshots.front().basis;
  const int M = static_cast<int>(X.snapshots.size()) - 1;
  if (W.steps < M)
    throw std::invalid_argument("stochastic_convolution_direct: Wiener path too short");
  SimConfig cfg;
  cfg.dim = basis.dim();
  cfg.modes_per_axis = basis.modes_per_axis();
  cfg.steps = std::max(M, 1);
  cfg.horizon = X.times.back();
  const ScalarFn zero = ScalarFn::zero();
  MildStepper stepper(cfg, spec, zero, g);
  const int nk = basis.mode_count();

  std::vector<SpectralField> out(X.snapshots.size(), SpectralField(basis));
  std::vector<double> cur(static_cast<std::size_t>(nk), 0.0);
  for (int m = 0; m < M; ++m) {
    stepper.add_diffusion(X.snapshots[m].coeffs, W, m, cur);
    for (int k = 0; k < nk; ++k) cur[k] *= stepper.decay()[k];
    out[m + 1].coeffs = cur;
  }
  return out;
}

std::vector<std::vector<double>> r_alpha_apply_modes(const std::vector<std::vector<double>>& values,
                                                     std::span<const double> lambdas, double dt,
                                                     double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0)
    throw std::invalid_argument("r_alpha_apply: alpha must lie in (0,1)");
  const int M = static_cast<int>(values.size()) - 1;
  const std::size_t nk = lambdas.size();
  std::vector<std::vector<double>> out(values.size(),
                                       std::vector<double>(nk, 0.0));
  if (M < 1) return out;

  // lag weights: w[l] = ((l dt)^a - ((l-1) dt)^a)/a, l >= 1
  std::vector<double> w(static_cast<std::size_t>(M) + 1, 0.0);
  for (int l = 1; l <= M; ++l)
    w[l] = (std::pow(l * dt, alpha) - std::pow((l - 1) * dt, alpha)) / alpha;

  std::vector<double> edecay(static_cast<std::size_t>(M) + 1);
  for (std::size_t k = 0; k < nk; ++k) {
    const double lam = lambdas[k];
    edecay[0] = 1.0;
    const double e1 = std::exp(-lam * dt);
    for (int l = 1; l <= M; ++l) edecay[l] = edecay[l - 1] * e1;
    for (int m = 1; m <= M; ++m) {
      double acc = 0.0;
      for (int j = 0; j < m; ++j) {
        const int l = m - j;
        acc += w[l] * edecay[l] * values[j][k];
      }
      out[m][k] = acc;
    }
  }
  return out;
}

std::vector<SpectralField> r_alpha_apply(const std::vector<SpectralField>& path, double dt,
                                         double alpha) {
  if (path.empty()) throw std::invalid_argument("r_alpha_apply: empty path");
  const EigenSystem& basis = path.front().basis;
  std::vector<double> lambdas(static_cast<std::size_t>(basis.mode_count()));
  for (int k = 0; k < basis.mode_count(); ++k) lambdas[k] = basis.lambda(k);
  std::vector<std::vector<double>> vals(path.size());
  for (std::size_t m = 0; m < path.size(); ++m) vals[m] = path[m].coeffs;
  const auto res = r_alpha_apply_modes(vals, lambdas, dt, alpha);
  std::vector<SpectralField> out(path.size(), SpectralField(basis));
  for (std::size_t m = 0; m < path.size(); ++m) out[m].coeffs = res[m];
  return out;
}

std::vector<SpectralField> stochastic_convolution_factorized(const SolutionPath& X,
                                                             const ScalarFn& g,
                                                             const WienerPath& W,
                                                             const NoiseSpec& spec, double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5))
    throw std::invalid_argument("stochastic_convolution_factorized: alpha must lie in (0, 1/2)");
  if (X.snapshots.empty())
    throw std::invalid_argument("stochastic_convolution_factorized: empty path");
  const EigenSystem& basis = X.snapshots.front().basis;
  const int nk = basis.mode_count();
  const int M = static_cast<int>(X.snapshots.size()) - 1;
  std::vector<SpectralField> out(X.snapshots.size(), SpectralField(basis));
  if (M < 1 || g.is_zero()) return out;
  if (W.steps < M)
    throw std::invalid_argument("stochastic_convolution_factorized: Wiener path too short");
  const double dt = X.times[1] - X.times[0];

  // mode-space integrand q_j = G(X(t_j)) dW_j
  SimConfig cfg;
  cfg.dim = basis.dim();
  cfg.modes_per_axis = basis.modes_per_axis();
  cfg.steps = M;
  cfg.horizon = X.times.back();
  const ScalarFn zero = ScalarFn::zero();
  MildStepper stepper(cfg, spec, zero, g);
  std::vector<std::vector<double>> qj(static_cast<std::size_t>(M),
                                      std::vector<double>(static_cast<std::size_t>(nk), 0.0));
  for (int j = 0; j < M; ++j) stepper.add_diffusion(X.snapshots[j].coeffs, W, j, qj[j]);

  // inner weights v[l] = ((l dt)^{1-a} - ((l-1) dt)^{1-a}) / ((1-a) dt)
  std::vector<double> v(static_cast<std::size_t>(M) + 1, 0.0),
      w(static_cast<std::size_t>(M) + 1, 0.0);
  for (int l = 1; l <= M; ++l) {
    v[l] = (std::pow(l * dt, 1.0 - alpha) - std::pow((l - 1) * dt, 1.0 - alpha)) /
           ((1.0 - alpha) * dt);
    w[l] = (std::pow(l * dt, alpha) - std::pow((l - 1) * dt, alpha)) / alpha;
  }

  const double front = std::sin(kPi * alpha) / kPi;
  std::vector<double> edecay(static_cast<std::size_t>(M) + 1);
  std::vector<double> Ga(static_cast<std::size_t>(M), 0.0);
  for (int k = 0; k < nk; ++k) {
    const double e1 = std::exp(-basis.lambda(k) * dt);
    edecay[0] = 1.0;
    for (int l = 1; l <= M; ++l) edecay[l] = edecay[l - 1] * e1;
    // G_alpha(t_j), j = 0..M-1 (only these feed R_alpha below)
    for (int j = 0; j < M; ++j) {
      double acc = 0.0;
      for (int i = 0; i < j; ++i) {
        const int l = j - i;
        acc += v[l] * edecay[l] * qj[i][k];
      }
      Ga[j] = acc;
    }
    for (int m = 1; m <= M; ++m) {
      double acc = 0.0;
      for (int j = 1; j < m; ++j) {
        const int l = m - j;
        acc += w[l] * edecay[l] * Ga[j];
      }
      out[m][k] = front * acc;
    }
  }
  return out;
}

double contraction_factor(double u, double c_F, double c_G, double T) {
  if (u <= 0.0) throw std::invalid_argument("contraction_factor: weight u must be positive");
  const double drift = c_F * (1.0 - std::exp(-u * T)) / u;
  const double diff = c_G * std::sqrt((1.0 - std::exp(-2.0 * u * T)) / (2.0 * u));
  return drift + diff;
}

double contraction_weight_for(double c_F, double c_G, double T, double target, double tol) {
  if (target <= 0.0) throw std::invalid_argument("contraction_weight_for: target must be positive");
  double lo = 1e-12;
  if (contraction_factor(lo, c_F, c_G, T) <= target) return lo;
  double hi = 1.0;
  while (contraction_factor(hi, c_F, c_G, T) > target) {
    hi *= 2.0;
    if (hi > 1e18) throw std::runtime_error("contraction_weight_for: no bracket found");
  }
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (contraction_factor(mid, c_F, c_G, T) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

std::pair<SolutionPath, PicardReport> picard_solve(const SimConfig& cfg, const SpectralField& X0,
                                                   const WienerPath& W, const NoiseSpec& spec,
                                                   const ScalarFn& f, const ScalarFn& g, double u,
                                                   int iterations) {
  require_consistent(cfg, X0, W);
  if (iterations < 1) throw std::invalid_argument("picard_solve: need at least one iteration");
  MildStepper stepper(cfg, spec, f, g);
  const EigenSystem& basis = stepper.state_basis();
  const int nk = basis.mode_count();
  const int M = cfg.steps;
  const int ng = cfg.dealias_points(spec.modes_per_axis);
  const DstPlan norm_plan(basis, ng);

  const auto times = grid_times(cfg);

  // iterate 0: free flow S(t) X0
  std::vector<std::vector<double>> prev(static_cast<std::size_t>(M) + 1);
  prev[0] = X0.coeffs;
  for (int m = 1; m <= M; ++m) {
    prev[m] = prev[m - 1];
    for (int k = 0; k < nk; ++k) prev[m][k] *= stepper.decay()[k];
  }

  PicardReport report;
  report.weight = u;
  report.iterations = iterations;

  std::vector<std::vector<double>> next(static_cast<std::size_t>(M) + 1);
  GridField diff_grid(cfg.dim, ng);
  for (int it = 1; it <= iterations; ++it) {
    next[0] = X0.coeffs;
    std::vector<double> cur = X0.coeffs;
    for (int m = 0; m < M; ++m) {
      stepper.add_drift(prev[m], cur);
      stepper.add_diffusion(prev[m], W, m, cur);
      for (int k = 0; k < nk; ++k) cur[k] *= stepper.decay()[k];
      check_blowup(cur, m + 1);
      next[m + 1] = cur;
    }
    std::vector<double> pnorms(static_cast<std::size_t>(M) + 1, 0.0);
    double weighted = 0.0;
    std::vector<double> dc(static_cast<std::size_t>(nk));
    for (int m = 0; m <= M; ++m) {
      for (int k = 0; k < nk; ++k) dc[k] = next[m][k] - prev[m][k];
      norm_plan.synthesize_into(dc, diff_grid.values);
      const double nq = lq_norm(diff_grid, cfg.q);
      pnorms[m] = std::pow(nq, cfg.p);
      weighted = std::max(weighted, std::exp(-u * times[m]) * nq);
    }
    report.diff_p_norms.push_back(std::move(pnorms));
    report.distances.push_back(weighted);
    prev.swap(next);
  }

  int growing = 0;
  for (std::size_t i = 1; i < report.distances.size(); ++i) {
    if (report.distances[i] > report.distances[i - 1]) {
      if (++growing >= 3) report.non_contraction_flagged = true;
    } else {
      growing = 0;
    }
  }

  SolutionPath path;
  path.path_id = W.path_id;
  path.times = times;
  path.snapshots.reserve(prev.size());
  for (auto& c : prev) path.snapshots.emplace_back(basis, std::move(c));
  return {std::move(path), std::move(report)};
}

} // namespace shesim
