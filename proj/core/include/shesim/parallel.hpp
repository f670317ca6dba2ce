#ifndef SHESIM_PARALLEL_HPP
#define SHESIM_PARALLEL_HPP

#include <cstdint>
#include <functional>
#include <thread>
#include <vector>

namespace shesim {

// Static block partition of [0, n) over a fixed worker count. Workers write
// into preassigned slots only; callers reduce sequentially afterwards, so
// results do not depend on the worker count or interleaving.
inline void parallel_for(std::int64_t n, int workers,
                         const std::function<void(std::int64_t, std::int64_t)>& body) {
  if (n <= 0) return;
  if (workers <= 1 || n == 1) {
    body(0, n);
    return;
  }
  const int w = static_cast<int>(std::min<std::int64_t>(workers, n));
  std::vector<std::thread> pool;
  pool.reserve(w);
  const std::int64_t chunk = (n + w - 1) / w;
  for (int i = 0; i < w; ++i) {
    const std::int64_t lo = i * chunk;
    const std::int64_t hi = std::min<std::int64_t>(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&body, lo, hi] { body(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

} // namespace shesim

#endif
