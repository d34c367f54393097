#pragma once

#include "ademu/interval.hpp"

#include <cmath>
#include <cstdint>
#include <optional>

namespace ademu {

/// Binary-scaled fixed-point number: mantissa * 2^-exp.
struct FixedValue {
    std::int64_t mantissa = 0;
    int exp = 0;

    double value() const { return std::ldexp(static_cast<double>(mantissa), -exp); }
    friend bool operator==(const FixedValue&, const FixedValue&) = default;
};

/// Fixed-point format. The represented range for a signed format is
/// [-2^int_bits, 2^int_bits - 2^-frac_bits]; unsigned starts at 0.
struct FixedFormat {
    bool is_signed = true;
    int int_bits = 0;
    int frac_bits = 0;

    int width() const { return (is_signed ? 1 : 0) + int_bits + frac_bits; }
    double lsb() const { return std::ldexp(1.0, -frac_bits); }
    double max_value() const { return std::ldexp(1.0, int_bits) - lsb(); }
    double min_value() const { return is_signed ? -std::ldexp(1.0, int_bits) : 0.0; }
    bool covers(const Interval<double>& r) const { return r.lo >= min_value() && r.hi <= max_value(); }

    friend bool operator==(const FixedFormat&, const FixedFormat&) = default;
};

/// Round half away from zero: |x - result| <= 2^(-exp-1).
/// With `width` set, a mantissa outside the signed range of that many bits
/// raises FormatError.
FixedValue quantize_round(double x, int exp, std::optional<int> width = std::nullopt);

/// Floor: |x - result| <= 2^-exp. Used for values generated at run time.
FixedValue quantize_trunc(double x, int exp, std::optional<int> width = std::nullopt);

/// Minimal number of integer bits so a format with `frac_bits` covers `range`.
int int_bits_for(const Interval<double>& range, int frac_bits, bool is_signed);

/// Smallest format whose half-LSB error is below target_rel_err * max(|lo|,|hi|)
/// and whose integer part covers the range.
FixedFormat choose_format(const Interval<double>& range, double target_rel_err);

/// Bits needed to store the mantissas in [min_m, max_m] (sign bit included when min_m < 0).
int mantissa_width(std::int64_t min_m, std::int64_t max_m);

} // namespace ademu
