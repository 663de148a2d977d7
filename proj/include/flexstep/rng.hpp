#pragma once

#include <cstdint>

namespace flexstep
{
    // SplitMix64 (Steele, Lea, Flood 2014). Used for seeding and for cheap
    // deterministic hashing of indices.
    constexpr std::uint64_t splitmix64(std::uint64_t& state) noexcept
    {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    // xorshift64* (Vigna 2016): shifts (12, 25, 27), multiplier 0x2545F4914F6CDD1D.
    // The state is seeded through one SplitMix64 step so that seed 0 is legal.
    // All generation in this project goes through this generator, so any
    // implementation with the same algorithm reproduces the same task sets.
    class Rng
    {
    public:
        explicit constexpr Rng(std::uint64_t seed) noexcept
        {
            std::uint64_t s = seed;
            state_ = splitmix64(s);
            if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
        }

        constexpr std::uint64_t next() noexcept
        {
            state_ ^= state_ >> 12;
            state_ ^= state_ << 25;
            state_ ^= state_ >> 27;
            return state_ * 0x2545F4914F6CDD1DULL;
        }

        // Uniform in the open interval (0, 1): 53-bit mantissa, midpoint-offset.
        constexpr double uniform_open() noexcept
        {
            return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
        }

        constexpr double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform_open(); }

        // Uniform integer in [0, bound) by rejection (no modulo bias).
        constexpr std::uint64_t below(std::uint64_t bound) noexcept
        {
            if (bound <= 1) return 0;
            const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % bound);
            std::uint64_t x = next();
            while (x >= limit) x = next();
            return x % bound;
        }

        constexpr std::uint64_t state() const noexcept { return state_; }

    private:
        std::uint64_t state_ = 0;
    };
} // namespace flexstep
