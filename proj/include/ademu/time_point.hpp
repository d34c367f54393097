#pragma once

#include <cassert>
#include <cmath>
#include <compare>
#include <cstdint>

namespace ademu {

/// Default binary scale of emulated time: one quantum is 2^-32 ns (~0.23 fs).
inline constexpr int kDefaultTimeExp = 32;

/// Exact emulated time (or time difference) in nanoseconds: mantissa * 2^-scale_exp.
///
/// All TimePoints taking part in one emulation share the same scale_exp, so
/// comparison and subtraction are plain integer operations and never round.
struct TimePoint {
    std::int64_t mantissa = 0;
    int scale_exp = kDefaultTimeExp;

    constexpr TimePoint() = default;
    constexpr TimePoint(std::int64_t m, int exp) : mantissa(m), scale_exp(exp) {}

    /// Nearest representable time to `ns` on the 2^-exp grid.
    static TimePoint from_ns(double ns, int exp = kDefaultTimeExp)
    {
        return {static_cast<std::int64_t>(std::llround(std::ldexp(ns, exp))), exp};
    }

    static constexpr TimePoint zero(int exp = kDefaultTimeExp) { return {0, exp}; }

    /// Size of one time quantum in nanoseconds.
    double quantum_ns() const { return std::ldexp(1.0, -scale_exp); }

    double to_ns() const { return std::ldexp(static_cast<double>(mantissa), -scale_exp); }

    friend constexpr TimePoint operator+(TimePoint a, TimePoint b)
    {
        assert(a.scale_exp == b.scale_exp);
        return {a.mantissa + b.mantissa, a.scale_exp};
    }
    friend constexpr TimePoint operator-(TimePoint a, TimePoint b)
    {
        assert(a.scale_exp == b.scale_exp);
        return {a.mantissa - b.mantissa, a.scale_exp};
    }
    constexpr TimePoint operator-() const { return {-mantissa, scale_exp}; }
    TimePoint& operator+=(TimePoint o)
    {
        assert(scale_exp == o.scale_exp);
        mantissa += o.mantissa;
        return *this;
    }

    friend constexpr bool operator==(TimePoint a, TimePoint b)
    {
        assert(a.scale_exp == b.scale_exp);
        return a.mantissa == b.mantissa;
    }
    friend constexpr std::strong_ordering operator<=>(TimePoint a, TimePoint b)
    {
        assert(a.scale_exp == b.scale_exp);
        return a.mantissa <=> b.mantissa;
    }
};

} // namespace ademu
