#ifndef CFCAL_RNG_HPP
#define CFCAL_RNG_HPP

#include <cstdint>
#include <random>

namespace cfcal {

// splitmix64; used to derive independent stream seeds from one root seed so
// that adding or reordering parallel work units cannot perturb other streams.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Seed for stream `stream` of the generator rooted at `root`.
inline std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream) {
    return mix_seed(root ^ mix_seed(stream));
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::uint64_t stream = 0) {
    return Rng(split_seed(root, stream));
}

} // namespace cfcal

#endif
