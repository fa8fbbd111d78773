#pragma once

#include <cstdint>
#include <random>

namespace hsdiff {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Counter-based stream derivation: (root, index) -> independent seed.
// index -> root + golden*(index+1) is injective for fixed root, so derived
// streams never collide.
inline std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) {
    return splitmix64(root + 0x9E3779B97F4A7C15ULL * (index + 1));
}

// Seeded generator passed by value or reference; no global state anywhere.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    double uniform() { return uni_(eng_); }                      // [0,1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal() { return norm_(eng_); }                      // N(0,1)
    std::uint64_t next_u64() { return eng_(); }

private:
    std::mt19937_64 eng_;
    std::uniform_real_distribution<double> uni_{0.0, 1.0};
    std::normal_distribution<double> norm_{0.0, 1.0};
};

} // namespace hsdiff
