#pragma once

#include <cstdint>
#include <utility>
#include <vector>

// Seeded, stateless hashing behind f(theta, c_theta, i): membership draws
// are stable and replayable for a given tree seed and path.

namespace bf::detail {

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline double path_hash01(std::uint64_t theta_seed,
                          const std::vector<std::pair<int, int>>& key, int var) {
    std::uint64_t h = splitmix64(theta_seed);
    for (const auto& [i, v] : key)
        h = splitmix64(h ^ (static_cast<std::uint64_t>(i) << 1 |
                            static_cast<std::uint64_t>(v)));
    h = splitmix64(h ^ (0x5151ULL + static_cast<std::uint64_t>(var)));
    return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace bf::detail
