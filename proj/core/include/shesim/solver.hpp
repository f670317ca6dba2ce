#ifndef SHESIM_SOLVER_HPP
#define SHESIM_SOLVER_HPP

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "shesim/field.hpp"
#include "shesim/noise.hpp"
#include "shesim/scalar_fn.hpp"

namespace shesim {

// Experiment parameters for one solver run.
struct SimConfig {
  double horizon = 1.0;     // T
  int steps = 256;          // M
  int modes_per_axis = 16;  // N
  int dim = 1;
  double q = 2.0;           // state-space exponent, >= 2
  double p = 4.0;           // moment exponent, > 2 when alpha is used
  double theta = 0.0;       // regularity index
  double alpha = 0.3;       // factorization exponent in (1/p, 1/2)
  enum class Scheme { expEuler, picard, ouExact } scheme = Scheme::expEuler;
  int ensemble_size = 100;
  std::uint64_t master_seed = 1;

  double dt() const { return horizon / steps; }
  // Dealiased collocation grid for Nemytskii evaluation: n_g >= 2N, widened
  // when the noise carries more modes than the state.
  int dealias_points(int noise_modes_per_axis = 0) const {
    return 2 * std::max(modes_per_axis, noise_modes_per_axis);
  }
  // All violated constraints, empty when valid.
  std::vector<std::string> validate() const;
};

struct SolutionPath {
  std::vector<double> times;           // M+1 grid times
  std::vector<SpectralField> snapshots; // snapshot 0 equals X0
  std::uint64_t path_id = 0;
};

// Raised when a coefficient passes the blowup sentinel (1e12).
class SolverBlowupError : public std::runtime_error {
public:
  SolverBlowupError(int step, int mode, double value)
      : std::runtime_error("solver blowup at step " + std::to_string(step) + ", mode " +
                           std::to_string(mode) + ", value " + std::to_string(value)),
        step_(step), mode_(mode), value_(value) {}
  int step() const { return step_; }
  int mode() const { return mode_; }
  double value() const { return value_; }

private:
  int step_;
  int mode_;
  double value_;
};

// Exponential Euler one-step scheme for the mild formulation:
//   X_{m+1} = S(dt) [ X_m + dt F(X_m) + G(X_m) dW_m ],
// with F, G evaluated pseudo-spectrally on the dealiased grid. Adapted and
// deterministic given (X0, W).
SolutionPath exp_euler_solve(const SimConfig& cfg, const SpectralField& X0,
                             const WienerPath& W, const NoiseSpec& spec, const ScalarFn& f,
                             const ScalarFn& g);

// Exact mode-wise Ornstein-Uhlenbeck transitions for the linear additive
// case (f = 0, g = 1): the stochastic integral over each step is simulated
// exactly from the supplied increments plus an independent residual with
// the correct conditional covariance.
SolutionPath ou_exact_solve(const SimConfig& cfg, const SpectralField& X0, const WienerPath& W,
                            const NoiseSpec& spec);

enum class ConvolutionRule { leftPoint, exactCell };

// Deterministic convolution S*F(X) at all grid times; leftPoint uses
// sum_m S(t - t_m) F(X(t_m)) dt, exactCell integrates e^{-lambda (t-s)}
// exactly over each cell against the left-point drift value.
std::vector<SpectralField> deterministic_convolution(const SolutionPath& X, const ScalarFn& f,
                                                     ConvolutionRule rule = ConvolutionRule::leftPoint);

// Ito left-point stochastic convolution S<>G(X) at all grid times.
std::vector<SpectralField> stochastic_convolution_direct(const SolutionPath& X, const ScalarFn& g,
                                                         const WienerPath& W, const NoiseSpec& spec);

// Product-integrated R_alpha on per-mode data: values[m][k] at t_m = m dt;
// the singular kernel (t-r)^{alpha-1} is integrated exactly per cell
// against piecewise-constant data, with diagonal semigroup factors
// e^{-lambda_k (t_m - t_j)}. lambdas may be all zero (kernel-only case).
std::vector<std::vector<double>> r_alpha_apply_modes(const std::vector<std::vector<double>>& values,
                                                     std::span<const double> lambdas, double dt,
                                                     double alpha);

std::vector<SpectralField> r_alpha_apply(const std::vector<SpectralField>& path, double dt,
                                         double alpha);

// Factorized stochastic convolution sin(pi alpha)/pi * R_alpha G_alpha with
// the inner singular weights [(l dt)^{1-alpha} - ((l-1) dt)^{1-alpha}] /
// ((1-alpha) dt) applied to G(X(t_j)) dW_j. alpha must lie in (0, 1/2).
std::vector<SpectralField> stochastic_convolution_factorized(const SolutionPath& X,
                                                             const ScalarFn& g,
                                                             const WienerPath& W,
                                                             const NoiseSpec& spec, double alpha);

// L_T(u) for constant kernels: c_F (1-e^{-uT})/u + c_G sqrt((1-e^{-2uT})/(2u)).
double contraction_factor(double u, double c_F, double c_G, double T);

// Bisection for the weight u* with L_T(u*) = target.
double contraction_weight_for(double c_F, double c_G, double T, double target,
                              double tol = 1e-10);

struct PicardReport {
  double weight = 0.0;           // u
  int iterations = 0;
  // ||X^k(t_m) - X^{k-1}(t_m)||_q^p per iteration and grid time (single
  // path); ensemble aggregation averages these before the weighted sup.
  std::vector<std::vector<double>> diff_p_norms;
  // single-path weighted distances sup_m e^{-u t_m} (diff^p)^{1/p}
  std::vector<double> distances;
  bool non_contraction_flagged = false;
};

// Picard iteration of the discrete mild map with exponentially weighted
// distances; iterate 0 is the free flow S(t) X0.
std::pair<SolutionPath, PicardReport> picard_solve(const SimConfig& cfg, const SpectralField& X0,
                                                   const WienerPath& W, const NoiseSpec& spec,
                                                   const ScalarFn& f, const ScalarFn& g, double u,
                                                   int iterations);

} // namespace shesim

#endif
