#pragma once

#include <cstdint>

namespace snnkit {

// SplitMix64 finalizer (Steele, Lea, Flood).  Used as the mixing stage of
// the counter-based generator below.
constexpr uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Counter-based generator: the output depends only on (seed, stream,
// counter), so draws are reproducible in any evaluation order and safe to
// compute in parallel.  Streams map to pixels / samples, counters to
// timesteps.
constexpr uint64_t counter_hash(uint64_t seed, uint64_t stream, uint64_t counter) {
    uint64_t x = splitmix64(seed);
    x = splitmix64(x ^ stream);
    x = splitmix64(x ^ counter);
    return x;
}

// Uniform double in [0, 1) from the top 53 bits of the hash.
constexpr double uniform01(uint64_t seed, uint64_t stream, uint64_t counter) {
    return static_cast<double>(counter_hash(seed, stream, counter) >> 11) * 0x1.0p-53;
}

}  // namespace snnkit
