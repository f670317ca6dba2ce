#ifndef SHESIM_NOISE_HPP
#define SHESIM_NOISE_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "shesim/field.hpp"

namespace shesim {

// Q-Wiener eigensystem over the Dirichlet sine basis. The eigenvalue law is
// either the parametric family  lambda_n^Q = c |k|^{-2r}  (|k| the Euclidean
// mode magnitude, so plain c n^{-2r} in d=1) or an explicit per-mode list.
// An explicit list defines a finite-rank Q: eigenvalues vanish beyond the
// list ("truncated_view" marks lists that are truncations of an unknown law
// instead).
struct NoiseSpec {
  enum class Law { parametric, explicit_list };

  Law law = Law::parametric;
  double c = 1.0;
  double r = 1.0;
  std::vector<double> eigenvalue_list; // flat mode order, explicit_list only
  bool truncated_view = false;

  double epsilon = 0.0; // Hoelder exponent in (con-q)
  int dim = 1;
  int modes_per_axis = 1; // N_W

  int mode_count() const { return dim == 1 ? modes_per_axis : modes_per_axis * modes_per_axis; }
  double eigenvalue(int flat) const;
  // sum of eigenvalues over the first `count` flat modes
  double trace(int count) const;

  static NoiseSpec parametric_law(int dim, int modes_per_axis, double c, double r, double epsilon);
  static NoiseSpec from_list(int dim, int modes_per_axis, std::vector<double> eigenvalues, double epsilon);
};

// Sampled Brownian increments on a uniform grid of [0,T]: increments(m,n) ~
// N(0, dt), bit-reproducible from (master_seed, path_id, m, n).
struct WienerPath {
  double horizon = 0.0; // T
  int steps = 0;        // M
  int dim = 1;
  int modes_per_axis = 0; // N_W
  std::uint64_t master_seed = 0;
  std::uint64_t path_id = 0;
  int refine_level = 0; // number of dyadic refinements applied
  std::vector<double> increments; // [M x mode_count], step-major

  double dt() const { return horizon / steps; }
  int mode_count() const { return dim == 1 ? modes_per_axis : modes_per_axis * modes_per_axis; }
  double increment(int m, int n) const {
    return increments[static_cast<std::size_t>(m) * mode_count() + n];
  }
  // W(t_m) h_n = sum of increments up to m for mode n
  double cumulative(int m, int n) const;
};

struct CqReport {
  double partial_sum = 0.0;
  double tail_bound = 0.0;
  enum class Converged { yes, no, unknown } converged = Converged::unknown;
};

// Partial sum of sum_n sqrt(lambda_n^Q) ||h_n||_{C^eps} via grid Hoelder
// norms, plus an integral tail bound for the parametric law.
CqReport check_cq_condition(const NoiseSpec& spec);

WienerPath sample_wiener_increments(const NoiseSpec& spec, int steps, double horizon,
                                    std::uint64_t master_seed, std::uint64_t path_id);

// Brownian-bridge refinement by a power-of-two factor: refined increments
// sum exactly to the coarse increments and have the bridge conditional law.
WienerPath refine_path(const WienerPath& path, int factor);

// Binary dump (little-endian: magic, version, seed, path id, M, N_W, dim, T,
// then row-major doubles) and its inverse.
void dump_wiener(const WienerPath& path, const std::filesystem::path& file);
WienerPath load_wiener(const std::filesystem::path& file);

} // namespace shesim

#endif
