#pragma once

#include <cmath>
#include <cstdint>

namespace frg {

// splitmix64 mixing function (Steele, Lea, Flood 2014).  Used as the core of a
// counter-based generator: output i of stream `seed` is a pure function of
// (seed, i), so ensembles regenerate bit-identically on every platform with
// IEEE-754 doubles, independent of standard-library distribution details.
inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(splitmix64(seed ^ splitmix64(stream))) {}

    // Uniform double in (0, 1); 53 mantissa bits, never exactly 0 or 1.
    double uniform() {
        const std::uint64_t bits = splitmix64(seed_ + 0x9e3779b97f4a7c15ULL * (++counter_));
        return static_cast<double>(bits >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    // Standard normal via Box-Muller (explicit formula, platform-stable).
    double normal() {
        const double u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t seed_;
    std::uint64_t counter_ = 0;
};

}  // namespace frg
