#pragma once

#include <cstdint>

namespace livsic {

// splitmix64: tiny, reproducible, good enough for Monte-Carlo sampling here.
struct SplitMix {
    std::uint64_t state;

    explicit SplitMix(std::uint64_t seed) : state(seed ? seed : 1) {}

    std::uint64_t next_u64() {
        state += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // uniform in [0, 1)
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
};

}  // namespace livsic
