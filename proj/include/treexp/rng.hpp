#pragma once

#include <cstdint>

namespace treexp {

/// splitmix64; tiny, portable, byte-stable across platforms. Used wherever a
/// seeded sample must reproduce identically (rule sampling, sign draws).
struct Rng {
    std::uint64_t state = 0;

    explicit Rng(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// uniform in [0, 1)
    double u01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// uniform in {0, ..., n-1}; modulo bias is irrelevant at our scales
    std::uint64_t below(std::uint64_t n) { return n <= 1 ? 0 : next() % n; }

    bool coin(double p) { return u01() < p; }
};

}  // namespace treexp
