#ifndef SHESIM_MANIFEST_HPP
#define SHESIM_MANIFEST_HPP

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shesim/noise.hpp"
#include "shesim/scalar_fn.hpp"
#include "shesim/solver.hpp"

namespace shesim {

// Which checks an experiment runs and their grids.
struct AnalysisPlan {
  bool per_mode_variance = false;
  std::vector<int> convergence_steps;    // exp-Euler vs OU oracle at these M
  bool hoelder_temporal = false;
  std::vector<double> hoelder_thetas;    // E^theta window clause
  bool hoelder_c0 = true;                // sup-norm clause
  std::vector<int> hoelder_lag_steps;    // lags in units of dt
  int hoelder_anchor_count = 4;
  double hoelder_moment_p = 2.0;
  std::vector<int> sweep_resolutions;    // coupled spatial resolutions
  std::vector<double> sweep_thetas;
  bool moment_bound = false;
  bool lp_continuity = false;
  int picard_iterations = 0;             // > 0 enables the Picard decay check
  int burkholder_integrands = 0;         // > 0 enables the Burkholder suite
  std::vector<int> factorization_steps;  // factorized-vs-direct at these M
  double target_epsilon = -1.0;          // >= 0: require cq convergence at this epsilon
  int moment_time_stride = 16;           // snapshot stride for sup-in-time checks
  bool dump_noise = false;
};

// Initial state catalogue: zero, a single first mode, or a band-limited
// power-law profile c_k = amplitude |k|^{-exponent}.
struct InitialSpec {
  enum class Kind { zero, mode1, decay } kind = Kind::zero;
  double amplitude = 1.0;
  double exponent = 3.0;

  SpectralField build(const EigenSystem& basis) const;
};

struct ExperimentManifest {
  int schema_version = 1;
  std::string name;
  SimConfig sim;
  NoiseSpec noise;
  ScalarFn drift = ScalarFn::zero();
  ScalarFn diffusion = ScalarFn::zero();
  InitialSpec initial;
  AnalysisPlan plan;
  std::string output_dir; // empty: $SHESIM_OUT or ./shesim-out

  // All violated constraints; empty means the manifest can run.
  std::vector<std::string> validate() const;
  // Snapshot times the analysis plan needs from each solver path.
  std::vector<double> required_snapshot_times() const;
  // Anchor times for the temporal-Hoelder regression, snapped to the grid.
  std::vector<double> hoelder_anchors() const;
  std::vector<std::pair<double, double>> continuity_pairs() const;
};

// Line-oriented key = value format with [section] headers; '#' comments.
// Unknown sections or keys are rejected. Round-trips losslessly.
ExperimentManifest parse_manifest_text(const std::string& text);
std::string serialize_manifest_text(const ExperimentManifest& m);

// JSON alternative of the same schema.
ExperimentManifest parse_manifest_json(const std::string& text);
std::string serialize_manifest_json(const ExperimentManifest& m);

// Loads either format by extension (.json vs anything else).
ExperimentManifest load_manifest(const std::filesystem::path& file);

std::string manifest_hash(const ExperimentManifest& m);

// Fixed experiment catalogue.
std::vector<std::string> preset_names();
ExperimentManifest preset(const std::string& name);

} // namespace shesim

#endif
