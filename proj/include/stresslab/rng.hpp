#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace stresslab {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Stable 64-bit mix. Used for cell hashing and for deriving seed streams;
// must not depend on std::hash (which is not stable across implementations).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return splitmix64(h ^ (splitmix64(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
}

// Deterministic RNG stream. All stochastic code draws through this wrapper so
// a fixed seed reproduces a run bit-for-bit. Gaussian variates use Box-Muller
// with no cached spare, keeping the draw count per call fixed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

    std::uint64_t seed() const { return seed_; }
    std::uint64_t next_u64() { return engine_(); }

    // [0, 1)
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // [0, n)
    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<std::uint64_t>(n)); }

    double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1]
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Independent child stream: seed xor stream id, then scrambled.
    Rng derive(std::uint64_t stream_id) const { return Rng(splitmix64(seed_ ^ splitmix64(stream_id))); }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace stresslab
