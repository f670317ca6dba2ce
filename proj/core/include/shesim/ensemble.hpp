#ifndef SHESIM_ENSEMBLE_HPP
#define SHESIM_ENSEMBLE_HPP

#include <cstdint>
#include <filesystem>
#include <vector>

#include "shesim/field.hpp"
#include "shesim/solver.hpp"

namespace shesim {

// Monte Carlo ensemble of solution snapshots at a fixed set of times.
// Regularity checks consume this structure (never the solver), so exported
// ensembles replay identically.
struct EnsembleData {
  int dim = 1;
  int modes_per_axis = 0;
  double horizon = 0.0;
  std::uint64_t master_seed = 0;
  std::vector<double> times;              // snapshot times, increasing
  std::vector<std::uint64_t> path_ids;
  // coefficients[path] has size times.size() * mode_count(), time-major
  std::vector<std::vector<double>> coefficients;
  int blowup_count = 0;                   // paths excluded by the sentinel
  int attempted_paths = 0;

  int mode_count() const { return dim == 1 ? modes_per_axis : modes_per_axis * modes_per_axis; }
  int path_count() const { return static_cast<int>(coefficients.size()); }
  // index of a snapshot time, -1 if absent (tolerance 1e-9 * max(1,T))
  int time_index(double t) const;
  std::span<const double> snapshot(int path, int time_idx) const;

  // keep only the snapshots at the listed times of a full solver path
  void append_path(const SolutionPath& path);
};

// Little-endian binary export: magic, version, dim, N, n_times, n_paths,
// seed, blowups, attempted, times, then per path (id, coefficients).
void export_ensemble(const EnsembleData& e, const std::filesystem::path& file);
EnsembleData import_ensemble(const std::filesystem::path& file);

} // namespace shesim

#endif
