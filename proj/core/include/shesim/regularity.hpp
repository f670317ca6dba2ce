#ifndef SHESIM_REGULARITY_HPP
#define SHESIM_REGULARITY_HPP

#include <cstdint>
#include <vector>

#include "shesim/ensemble.hpp"
#include "shesim/operators.hpp"

namespace shesim {

enum class NormKind { Lq, Etheta, Choelder };

// Structure-function regression setup: dyadic lags and the anchor times the
// increments start from.
struct LagSpec {
  std::vector<double> lags;
  std::vector<double> anchors;
};

struct HolderEstimate {
  double exponent = 0.0;  // delta-hat = slope / p
  double std_error = 0.0; // bootstrap (200 resamples over paths)
  double r_squared = 0.0;
  int lags_used = 0;
  bool reported = false;  // r_squared >= 0.95 and >= 5 lags
  NormKind kind = NormKind::Lq;
  double theta = 0.0;
  double p = 2.0;
  std::vector<double> structure; // mean ||increment||^p per lag
};

// log E||X(t+lag) - X(t)||^p = p delta log(lag) + c over dyadic lags,
// averaged over anchors; bootstrap SE over paths.
HolderEstimate temporal_holder_estimate(const EnsembleData& ens, double p, NormKind kind,
                                        double theta, const LagSpec& lags, double q,
                                        int norm_grid_points, std::uint64_t seed);

struct SpatialSweepRow {
  double theta = 0.0;
  std::vector<int> resolutions;
  std::vector<double> mean_sq_norm; // E ||X(T)||_theta^2 per resolution
  std::vector<double> ratios;       // successive mean-square ratios
  bool bounded = false;             // last ratio <= 1.15
};

// Mean-square E^theta norms at the final time across coupled resolutions;
// verdict "bounded" iff the last successive ratio stays below 1.15,
// geometric growth otherwise. Ensembles must share seed and horizon.
std::vector<SpatialSweepRow> spatial_regularity_sweep(const std::vector<EnsembleData>& ensembles,
                                                      const std::vector<double>& thetas, double q);

struct MomentReport {
  double sup_moment = 0.0;   // sup_t E ||X(t)||_theta^p
  double bound_ratio = 0.0;  // sup / (1 + ||X0||_theta^p)
  int blowup_count = 0;
  double blowup_fraction = 0.0;
  bool pass = false;         // finite and blowup fraction <= 0.1%
};

MomentReport moment_bound_check(const EnsembleData& ens, double p, double theta,
                                const SpectralField& X0, double q, int norm_grid_points);

struct LpContinuityReport {
  std::vector<double> gaps;    // |t1 - t2|, decreasing
  std::vector<double> moments; // E ||X(t1) - X(t2)||_theta^p
  bool monotone = false;       // non-increasing within 10% slack as gap shrinks
  double small_large_ratio = 0.0;
  bool pass = false;
};

// E||X(t1)-X(t2)||_theta^p across shrinking gaps (pairs share the anchor).
LpContinuityReport lp_continuity_check(const EnsembleData& ens, double p, double theta,
                                       const std::vector<std::pair<double, double>>& pairs,
                                       double q, int norm_grid_points);

// Elementary adapted step-process integrand: piecewise-constant finite-rank
// operator on a partition of [0,T], optionally modulated by a bounded
// function of the driving path (left endpoint, so adapted).
struct StepIntegrand {
  std::vector<double> piece_times;        // P+1 boundaries, aligned to the W grid
  std::vector<FiniteRankOperator> pieces; // P operators
  enum class Modulation { none, tanh_w } modulation = Modulation::none;
  int modulation_mode = 0;
};

struct BurkholderReport {
  std::vector<double> ratios; // lhs / rhs per integrand
  double median_ratio = 0.0;
  double max_ratio = 0.0;
  bool pass = false;          // max <= 10 x median
  bool underpowered = false;  // fewer than 20 integrands
};

// One-sided Burkholder inequality: for each integrand the sup-moment
// E sup_t ||int Phi dW||^p against (int (E||Phi(r)||_gamma^p)^{2/p} dr)^{p/2}
// over a shared cylindrical Wiener ensemble.
BurkholderReport burkholder_check(const std::vector<StepIntegrand>& integrands, double p, double q,
                                  int noise_modes, int steps, double horizon, int n_paths,
                                  int gamma_samples, std::uint64_t seed);

} // namespace shesim

#endif
