#ifndef SHESIM_HASH_HPP
#define SHESIM_HASH_HPP

#include <cstdint>
#include <iomanip>
#include <sstream>
#include <string>
#include <string_view>

namespace shesim {

// FNV-1a 64-bit content hash; stable across platforms and runs.
inline std::uint64_t fnv1a(std::string_view bytes,
                           std::uint64_t h = 0xCBF29CE484222325ULL) {
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

inline std::string hash_hex(std::string_view bytes) {
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << fnv1a(bytes);
  return os.str();
}

} // namespace shesim

#endif
