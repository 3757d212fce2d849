#pragma once

#include <cstdint>
#include <random>

namespace lutpim {

__extension__ using uint128_t = unsigned __int128;

/// Seeded generator with platform-independent draws. std::mt19937_64's raw output is fixed by
/// the standard; the <random> distributions are not, so bounded draws are done here.
class DeterministicRng {
public:
    explicit DeterministicRng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    /// Uniform integer in [lo, hi].
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
        const std::uint64_t span = hi - lo + 1;
        if (span == 0) {
            return next();
        }
        return lo + static_cast<std::uint64_t>((static_cast<uint128_t>(next()) * span) >> 64);
    }

    /// Uniform real in [0, 1).
    double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform_real(double lo, double hi) { return lo + (hi - lo) * unit(); }

private:
    std::mt19937_64 engine_;
};

/// SplitMix64 finalizer; derives independent sub-seeds from (seed, index).
constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace lutpim
