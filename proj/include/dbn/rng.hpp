#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dbn {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
} // namespace detail

// Seeded generator with explicit forking so every component draws from its own
// stream. Uniform and Gaussian draws are implemented directly on the raw
// 64-bit output, so sequences do not depend on the standard library's
// distribution internals.
class Rng {
public:
    explicit Rng(std::uint64_t seed)
        : root_(detail::splitmix64(seed)), engine_(root_) {}

    // Child stream derived from this generator's seed and a tag; does not
    // advance or depend on this generator's position.
    Rng fork(std::uint64_t tag) const {
        return Rng(root_ ^ detail::splitmix64(tag ^ 0xa5a5a5a5a5a5a5a5ULL));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller; one value per call so the draw count
    // stays predictable.
    double gaussian() {
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

private:
    std::uint64_t root_;
    std::mt19937_64 engine_;
};

} // namespace dbn
