#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace phaseret {

/// Engine used for every sampling operation. Callers own the instance and
/// hence stream isolation.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to turn structured stream coordinates into
/// well-mixed engine seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Counter-based stream derivation: the seed of a stream is a pure function
/// of (master seed, coordinates...), so any trial can be regenerated in
/// isolation and results do not depend on evaluation order.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> coords) noexcept {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t c : coords) {
        h = splitmix64(h ^ splitmix64(c + 0x632BE59BD9B4E019ULL));
    }
    return h;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
    return Rng(derive_seed(master, coords));
}

/// Stream tags of the experiment harness; documented in the README.
enum StreamTag : std::uint64_t {
    kStreamSignal = 1,
    kStreamEnsemble = 2,
    kStreamNoise = 3,
    kStreamCensus = 4,
};

} // namespace phaseret
