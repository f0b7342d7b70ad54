#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace tablekit {

/// Deterministic, portable pseudo-random source: xoshiro256** seeded
/// through splitmix64. Fixture files record kGeneratorId so another
/// implementation of the same algorithm reproduces them bit-exactly.
///
/// Derived draws are fixed as:
///   unit double  u = (next() >> 11) * 2^-53            in [0, 1)
///   bounded int  k = floor(u * n)                      in [0, n)
/// The floor mapping has negligible bias for the small n used here and is
/// trivially portable.
class Rng {
public:
    static constexpr std::string_view kGeneratorId = "xoshiro256**/splitmix64-seed/v1";

    explicit Rng(std::uint64_t seed) {
        std::uint64_t x = seed;
        for (auto& word : s_) {
            // splitmix64 step
            x += 0x9e3779b97f4a7c15ULL;
            std::uint64_t z = x;
            z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
            z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
            word = z ^ (z >> 31);
        }
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    double next_unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double next_in(double lo, double hi) { return lo + (hi - lo) * next_unit(); }

    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) return 0;
        auto k = static_cast<std::uint64_t>(next_unit() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

    /// Standard normal via Box-Muller. Stateless (the paired variate is
    /// discarded) so the draw count stays predictable: two uniforms per
    /// call.
    double next_gaussian() {
        const double u1 = 1.0 - next_unit();  // (0, 1]
        const double u2 = next_unit();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t s_[4]{};
};

}  // namespace tablekit
