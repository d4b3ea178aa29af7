#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace interleave {

// Seeded random source. The engine is std::mt19937_64 (fully specified by the
// standard); the real-valued conversions are done here rather than through
// std::*_distribution so that streams are identical across standard libraries.
class Rng {
public:
    explicit Rng(uint64_t seed = 0) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform();

    // Uniform integer in [0, n).
    uint64_t uniform_int(uint64_t n);

    // Standard normal (Box-Muller, caches the second value).
    double normal();

    bool bernoulli(double p) { return uniform() < p; }

private:
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stable 64-bit FNV-1a hash of a byte string.
uint64_t fnv1a64(std::string_view bytes);

} // namespace interleave
