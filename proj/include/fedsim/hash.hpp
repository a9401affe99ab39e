#pragma once

// FNV-1a, used for config fingerprints and model/file checksums.

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace fedsim {

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xCBF29CE484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ull) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::uint64_t fnv1a64(const std::vector<double>& v, std::uint64_t h = 0xCBF29CE484222325ull) {
  return fnv1a64(v.data(), v.size() * sizeof(double), h);
}

}  // namespace fedsim
