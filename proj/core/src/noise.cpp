#include "shesim/noise.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "shesim/norms.hpp"
#include "shesim/rng.hpp"

namespace shesim {

namespace {
constexpr double kPi = 3.14159265358979323846264338327950288;
constexpr std::uint32_t kWienerMagic = 0x53484557u; // "SHEW"
constexpr std::uint32_t kWienerVersion = 1;
} // namespace

double NoiseSpec::eigenvalue(int flat) const {
  if (law == Law::explicit_list) {
    if (flat < 0 || static_cast<std::size_t>(flat) >= eigenvalue_list.size()) return 0.0;
    return eigenvalue_list[static_cast<std::size_t>(flat)];
  }
  const EigenSystem basis(dim, modes_per_axis);
  return c * std::pow(basis.mode_norm_sq(flat), -r);
}

double NoiseSpec::trace(int count) const {
  double s = 0.0;
  for (int n = 0; n < count; ++n) s += eigenvalue(n);
  return s;
}

NoiseSpec NoiseSpec::parametric_law(int dim, int modes_per_axis, double c, double r,
                                    double epsilon) {
  if (r <= 0.0) throw std::invalid_argument("NoiseSpec: decay exponent r must be positive");
  if (c < 0.0) throw std::invalid_argument("NoiseSpec: scale c must be nonnegative");
  if (epsilon < 0.0 || epsilon > 1.0)
    throw std::invalid_argument("NoiseSpec: epsilon must lie in [0,1]");
  NoiseSpec s;
  s.law = Law::parametric;
  s.c = c;
  s.r = r;
  s.epsilon = epsilon;
  s.dim = dim;
  s.modes_per_axis = modes_per_axis;
  return s;
}

NoiseSpec NoiseSpec::from_list(int dim, int modes_per_axis, std::vector<double> eigenvalues,
                               double epsilon) {
  NoiseSpec s;
  s.law = Law::explicit_list;
  s.dim = dim;
  s.modes_per_axis = modes_per_axis;
  s.epsilon = epsilon;
  const int count = s.mode_count();
  if (eigenvalues.size() != static_cast<std::size_t>(count))
    throw std::invalid_argument("NoiseSpec: eigenvalue list size must equal mode count");
  for (const double v : eigenvalues)
    if (v < 0.0) throw std::invalid_argument("NoiseSpec: eigenvalues must be nonnegative");
  s.eigenvalue_list = std::move(eigenvalues);
  return s;
}

double WienerPath::cumulative(int m, int n) const {
  double s = 0.0;
  for (int j = 0; j < m; ++j) s += increment(j, n);
  return s;
}

namespace {

// eps-Hoelder seminorm of sin(pi .) over a window of `width` half-periods.
// Pairs further apart than one full period cannot increase the quotient
// (the numerator is capped at 2), so width 2 determines the constant for
// every mode with an interior zero crossing; the first mode sees only a
// half period and gets its own (smaller) constant via width 1.
double sine_seminorm_constant(double eps, double width) {
  if (eps <= 0.0) return 0.0;
  const int n = 2400;
  double best = 0.0;
  std::vector<double> s(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) s[i] = std::sin(kPi * width * i / n);
  for (int i = 0; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) {
      const double d = width * (j - i) / n;
      best = std::max(best, std::abs(s[i] - s[j]) / std::pow(d, eps));
    }
  return best;
}

struct SineConstants {
  double full = 0.0; // modes n >= 2: seminorm(sin(n pi .)) = n^eps * full
  double half = 0.0; // mode n = 1
};

// ||h_n||_{C^eps}: sup norm sqrt(2)^d plus the scaled seminorm. d=2 uses the
// per-axis triangle split |h(xi)-h(eta)| <= |axis-1 step| + |axis-2 step|.
double mode_holder_norm(const EigenSystem& basis, int flat, double eps,
                        const SineConstants& sc) {
  const auto k = basis.multi_index(flat);
  const double root2 = std::sqrt(2.0);
  auto semi = [&](int ki) {
    const double c = ki == 1 ? sc.half : sc.full;
    return root2 * std::pow(static_cast<double>(ki), eps) * c;
  };
  if (basis.dim() == 1) return root2 + semi(k[0]);
  return 2.0 + semi(k[0]) * root2 + semi(k[1]) * root2;
}

} // namespace

CqReport check_cq_condition(const NoiseSpec& spec) {
  CqReport rep;
  const EigenSystem basis(spec.dim, spec.modes_per_axis);
  SineConstants sc;
  sc.full = sine_seminorm_constant(spec.epsilon, 2.0);
  sc.half = sine_seminorm_constant(spec.epsilon, 1.0);
  for (int n = 0; n < spec.mode_count(); ++n) {
    const double lq = spec.eigenvalue(n);
    if (lq == 0.0) continue;
    rep.partial_sum += std::sqrt(lq) * mode_holder_norm(basis, n, spec.epsilon, sc);
  }

  if (spec.law == NoiseSpec::Law::explicit_list) {
    rep.tail_bound = 0.0;
    rep.converged = spec.truncated_view ? CqReport::Converged::unknown
                                        : CqReport::Converged::yes;
    return rep;
  }

  // Parametric tail: sqrt(lambda^Q) ||h||_{C^eps} <= sqrt(c)|k|^{-r} *
  // sqrt(2)^d (1 + (pi sqrt(d) |k|)^eps). Integral comparison beyond the
  // resolved box.
  const double N = spec.modes_per_axis;
  const double eps = spec.epsilon;
  const double root_c = std::sqrt(spec.c);
  const double inf = std::numeric_limits<double>::infinity();
  double tail = 0.0;
  if (spec.dim == 1) {
    const double pref = root_c * std::sqrt(2.0);
    tail += (spec.r > 1.0) ? pref * std::pow(N, 1.0 - spec.r) / (spec.r - 1.0) : inf;
    if (eps > 0.0) { // seminorm term ||h_n||_{C^eps} - sup ~ sqrt(2)(n pi)^eps
      const double s = spec.r - eps;
      tail += (s > 1.0) ? pref * std::pow(kPi, eps) * std::pow(N, 1.0 - s) / (s - 1.0) : inf;
    }
  } else {
    const double pref = root_c * 2.0 * (kPi / 2.0); // angular measure of the quadrant
    tail += (spec.r > 2.0) ? pref * std::pow(N, 2.0 - spec.r) / (spec.r - 2.0) : inf;
    if (eps > 0.0) {
      const double s = spec.r - eps;
      tail += (s > 2.0) ? pref * std::pow(std::sqrt(2.0) * kPi, eps) * std::pow(N, 2.0 - s) /
                              (s - 2.0)
                        : inf;
    }
  }
  rep.tail_bound = tail;
  rep.converged = (std::isfinite(tail) && tail < 0.01 * rep.partial_sum)
                      ? CqReport::Converged::yes
                      : CqReport::Converged::no;
  if (rep.partial_sum == 0.0 && tail == 0.0) rep.converged = CqReport::Converged::yes;
  return rep;
}

WienerPath sample_wiener_increments(const NoiseSpec& spec, int steps, double horizon,
                                    std::uint64_t master_seed, std::uint64_t path_id) {
  if (steps < 1) throw std::invalid_argument("sample_wiener_increments: need steps >= 1");
  if (horizon <= 0.0) throw std::invalid_argument("sample_wiener_increments: need horizon > 0");
  WienerPath path;
  path.horizon = horizon;
  path.steps = steps;
  path.dim = spec.dim;
  path.modes_per_axis = spec.modes_per_axis;
  path.master_seed = master_seed;
  path.path_id = path_id;
  const int nm = path.mode_count();
  path.increments.resize(static_cast<std::size_t>(steps) * nm);
  const double sd = std::sqrt(horizon / steps);
  const EigenSystem basis(spec.dim, spec.modes_per_axis);
  for (int m = 0; m < steps; ++m)
    for (int n = 0; n < nm; ++n)
      path.increments[static_cast<std::size_t>(m) * nm + n] =
          sd * rng::normal(master_seed, rng::kWiener, path_id,
                           static_cast<std::uint32_t>(m), basis.packed_id(n));
  return path;
}

WienerPath refine_path(const WienerPath& path, int factor) {
  if (factor < 2 || (factor & (factor - 1)) != 0)
    throw std::invalid_argument("refine_path: factor must be a power of two >= 2");
  WienerPath fine = path;
  const EigenSystem basis(path.dim, path.modes_per_axis);
  int remaining = factor;
  while (remaining > 1) {
    const int nm = fine.mode_count();
    const int M = fine.steps;
    const double half_sd = 0.5 * std::sqrt(fine.dt());
    std::vector<double> next(static_cast<std::size_t>(2 * M) * nm);
    const std::uint32_t purpose = rng::kBridge + static_cast<std::uint32_t>(fine.refine_level);
    for (int m = 0; m < M; ++m) {
      for (int n = 0; n < nm; ++n) {
        const double dw = fine.increment(m, n);
        const double z = rng::normal(fine.master_seed, purpose, fine.path_id,
                                     static_cast<std::uint32_t>(m), basis.packed_id(n));
        const double left = 0.5 * dw + half_sd * z;
        next[static_cast<std::size_t>(2 * m) * nm + n] = left;
        next[static_cast<std::size_t>(2 * m + 1) * nm + n] = dw - left;
      }
    }
    fine.increments = std::move(next);
    fine.steps = 2 * M;
    fine.refine_level += 1;
    remaining /= 2;
  }
  return fine;
}

void dump_wiener(const WienerPath& path, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("dump_wiener: cannot open " + file.string());
  auto put32 = [&os](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto put64 = [&os](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  put32(kWienerMagic);
  put32(kWienerVersion);
  put64(path.master_seed);
  put64(path.path_id);
  put32(static_cast<std::uint32_t>(path.steps));
  put32(static_cast<std::uint32_t>(path.modes_per_axis));
  put32(static_cast<std::uint32_t>(path.dim));
  put32(static_cast<std::uint32_t>(path.refine_level));
  os.write(reinterpret_cast<const char*>(&path.horizon), 8);
  os.write(reinterpret_cast<const char*>(path.increments.data()),
           static_cast<std::streamsize>(path.increments.size() * 8));
  if (!os) throw std::runtime_error("dump_wiener: write failed for " + file.string());
}

WienerPath load_wiener(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("load_wiener: cannot open " + file.string());
  auto get32 = [&is] {
    std::uint32_t v;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get64 = [&is] {
    std::uint64_t v;
    is.read(reinterpret_cast<char*>(&v), 8);
    return v;
  };
  if (get32() != kWienerMagic) throw std::runtime_error("load_wiener: bad magic");
  if (get32() != kWienerVersion) throw std::runtime_error("load_wiener: unsupported version");
  WienerPath path;
  path.master_seed = get64();
  path.path_id = get64();
  path.steps = static_cast<int>(get32());
  path.modes_per_axis = static_cast<int>(get32());
  path.dim = static_cast<int>(get32());
  path.refine_level = static_cast<int>(get32());
  is.read(reinterpret_cast<char*>(&path.horizon), 8);
  path.increments.resize(static_cast<std::size_t>(path.steps) * path.mode_count());
  is.read(reinterpret_cast<char*>(path.increments.data()),
          static_cast<std::streamsize>(path.increments.size() * 8));
  if (!is) throw std::runtime_error("load_wiener: truncated file " + file.string());
  return path;
}

} // namespace shesim
