#pragma once

#include "ademu/time_manager.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace ademu::test {

// Fixed seeds keep property failures reproducible.
inline std::mt19937_64 rng(std::uint64_t salt = 0) { return std::mt19937_64(0x5eed0000u + salt); }

inline double uniform(std::mt19937_64& g, double lo, double hi)
{
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

inline int uniform_int(std::mt19937_64& g, int lo, int hi)
{
    return std::uniform_int_distribution<int>(lo, hi)(g);
}

// Independent model of one clock's edge times.
struct ClockModel {
    std::int64_t period, jitter;
    int phases, bits;
    Lfsr lfsr;
    std::int64_t next;
    int phase = 0;
    bool every_phase = false;

    std::int64_t advance()
    {
        const std::int64_t fired = next;
        std::int64_t inc = period / phases;
        if (phase == phases - 1)
            inc = period - (period / phases) * (phases - 1);
        if (phase == phases - 1 || every_phase) {
            if (jitter > 0) {
                std::uint64_t r = 0;
                for (int i = 0; i < bits; ++i)
                    r = (r << 1) | (lfsr.next() & 1u);
                const long double top = std::ldexp(1.0L, bits) - 1;
                inc += std::llround(static_cast<long double>(r) * 2 * jitter / top) - jitter;
            }
        }
        next += inc;
        phase = (phase + 1) % phases;
        return fired;
    }
};

} // namespace ademu::test
