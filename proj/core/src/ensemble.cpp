#include "shesim/ensemble.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

namespace shesim {

namespace {
constexpr std::uint32_t kMagic = 0x53484542u; // "SHEB"
constexpr std::uint32_t kVersion = 1;
} // namespace

int EnsembleData::time_index(double t) const {
  const double tol = 1e-9 * std::max(1.0, horizon);
  for (std::size_t i = 0; i < times.size(); ++i)
    if (std::abs(times[i] - t) <= tol) return static_cast<int>(i);
  return -1;
}

std::span<const double> EnsembleData::snapshot(int path, int time_idx) const {
  const int nk = mode_count();
  return {coefficients[static_cast<std::size_t>(path)].data() +
              static_cast<std::size_t>(time_idx) * nk,
          static_cast<std::size_t>(nk)};
}

void EnsembleData::append_path(const SolutionPath& path) {
  const int nk = mode_count();
  std::vector<double> row(times.size() * static_cast<std::size_t>(nk));
  const double tol = 1e-9 * std::max(1.0, horizon);
  for (std::size_t i = 0; i < times.size(); ++i) {
    // snapshot times must lie on the path grid
    const double t = times[i];
    const double dt = path.times.size() > 1 ? path.times[1] - path.times[0] : 1.0;
    const int m = static_cast<int>(std::llround(t / dt));
    if (m < 0 || m >= static_cast<int>(path.times.size()) ||
        std::abs(path.times[static_cast<std::size_t>(m)] - t) > tol)
      throw std::invalid_argument("EnsembleData: snapshot time off the path grid");
    const auto& c = path.snapshots[static_cast<std::size_t>(m)].coeffs;
    std::copy(c.begin(), c.end(), row.begin() + static_cast<std::ptrdiff_t>(i * nk));
  }
  path_ids.push_back(path.path_id);
  coefficients.push_back(std::move(row));
}

void export_ensemble(const EnsembleData& e, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw std::runtime_error("export_ensemble: cannot open " + file.string());
  auto put32 = [&os](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto put64 = [&os](std::uint64_t v) { os.write(reinterpret_cast<const char*>(&v), 8); };
  put32(kMagic);
  put32(kVersion);
  put32(static_cast<std::uint32_t>(e.dim));
  put32(static_cast<std::uint32_t>(e.modes_per_axis));
  put32(static_cast<std::uint32_t>(e.times.size()));
  put32(static_cast<std::uint32_t>(e.coefficients.size()));
  put64(e.master_seed);
  put32(static_cast<std::uint32_t>(e.blowup_count));
  put32(static_cast<std::uint32_t>(e.attempted_paths));
  os.write(reinterpret_cast<const char*>(&e.horizon), 8);
  os.write(reinterpret_cast<const char*>(e.times.data()),
           static_cast<std::streamsize>(e.times.size() * 8));
  for (std::size_t p = 0; p < e.coefficients.size(); ++p) {
    put64(e.path_ids[p]);
    os.write(reinterpret_cast<const char*>(e.coefficients[p].data()),
             static_cast<std::streamsize>(e.coefficients[p].size() * 8));
  }
  if (!os) throw std::runtime_error("export_ensemble: write failed for " + file.string());
}

EnsembleData import_ensemble(const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw std::runtime_error("import_ensemble: cannot open " + file.string());
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
  if (get32() != kMagic) throw std::runtime_error("import_ensemble: bad magic");
  if (get32() != kVersion) throw std::runtime_error("import_ensemble: unsupported version");
  EnsembleData e;
  e.dim = static_cast<int>(get32());
  e.modes_per_axis = static_cast<int>(get32());
  const std::uint32_t n_times = get32();
  const std::uint32_t n_paths = get32();
  e.master_seed = get64();
  e.blowup_count = static_cast<int>(get32());
  e.attempted_paths = static_cast<int>(get32());
  is.read(reinterpret_cast<char*>(&e.horizon), 8);
  e.times.resize(n_times);
  is.read(reinterpret_cast<char*>(e.times.data()), static_cast<std::streamsize>(n_times * 8));
  const std::size_t row = static_cast<std::size_t>(n_times) * e.mode_count();
  e.path_ids.resize(n_paths);
  e.coefficients.resize(n_paths);
  for (std::uint32_t p = 0; p < n_paths; ++p) {
    e.path_ids[p] = get64();
    e.coefficients[p].resize(row);
    is.read(reinterpret_cast<char*>(e.coefficients[p].data()),
            static_cast<std::streamsize>(row * 8));
  }
  if (!is) throw std::runtime_error("import_ensemble: truncated file " + file.string());
  return e;
}

} // namespace shesim
