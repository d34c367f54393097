#include "ademu/errors.hpp"
#include "ademu/fixed_point.hpp"
#include "ademu/interval.hpp"

#include <bit>
#include <limits>
#include <string>

namespace ademu {

namespace {

std::int64_t checked_mantissa(double scaled, std::optional<int> width)
{
    if (!std::isfinite(scaled))
        throw FormatError("quantize: non-finite input");
    constexpr double limit = 9.2e18;
    if (std::abs(scaled) >= limit)
        throw FormatError("quantize: mantissa exceeds 64 bits");
    const auto m = static_cast<std::int64_t>(scaled);
    if (width) {
        if (*width < 1 || *width > 63)
            throw FormatError("quantize: width must be in [1, 63]");
        const std::int64_t hi = (std::int64_t{1} << (*width - 1)) - 1;
        const std::int64_t lo = -(std::int64_t{1} << (*width - 1));
        if (m > hi || m < lo)
            throw FormatError("quantize: mantissa " + std::to_string(m) + " overflows " +
                              std::to_string(*width) + "-bit format");
    }
    return m;
}

} // namespace

FixedValue quantize_round(double x, int exp, std::optional<int> width)
{
    // std::round is half-away-from-zero
    return {checked_mantissa(std::round(std::ldexp(x, exp)), width), exp};
}

FixedValue quantize_trunc(double x, int exp, std::optional<int> width)
{
    return {checked_mantissa(std::floor(std::ldexp(x, exp)), width), exp};
}

int int_bits_for(const Interval<double>& range, int frac_bits, bool is_signed)
{
    int bits = 0;
    for (;; ++bits) {
        const FixedFormat f{is_signed, bits, frac_bits};
        if (f.covers(range))
            return bits;
        if (bits > 1100)
            throw FormatError("int_bits_for: range too large");
    }
}

FixedFormat choose_format(const Interval<double>& range, double target_rel_err)
{
    if (!(target_rel_err > 0.0))
        throw FormatError("choose_format: target error must be positive");
    const double mag = range.magnitude();
    if (mag == 0.0)
        return {true, 0, 0};

    const double allowed = target_rel_err * mag;
    int frac = 0;
    // 2^(-f-1) <= allowed
    while (std::ldexp(1.0, -frac - 1) > allowed)
        ++frac;
    // Large ranges with loose targets could accept a negative f; clamp at 0.
    const bool is_signed = range.lo < 0.0;
    return {is_signed, int_bits_for(range, frac, is_signed), frac};
}

int mantissa_width(std::int64_t min_m, std::int64_t max_m)
{
    const auto magnitude_bits = [](std::int64_t v) {
        // bits for v >= 0 as unsigned magnitude; negative v needs bit_width(-v-1)
        const auto u = static_cast<std::uint64_t>(v < 0 ? -(v + 1) : v);
        return static_cast<int>(std::bit_width(u));
    };
    const int mag = std::max(magnitude_bits(min_m), magnitude_bits(max_m));
    const bool is_signed = min_m < 0;
    return std::max(1, mag + (is_signed ? 1 : 0));
}

// ---------------------------------------------------------------------------

Expr Expr::leaf(std::size_t index)
{
    auto n = std::make_shared<Node>();
    n->op = Op::Leaf;
    n->index = index;
    return Expr(std::move(n));
}

Expr Expr::binary(Op op, const Expr& a, const Expr& b)
{
    auto n = std::make_shared<Node>();
    n->op = op;
    n->lhs = a.node_;
    n->rhs = b.node_;
    return Expr(std::move(n));
}

Expr Expr::operator-() const
{
    auto n = std::make_shared<Node>();
    n->op = Op::Neg;
    n->lhs = node_;
    return Expr(std::move(n));
}

double Expr::evaluate(std::span<const double> leaves) const { return eval_node(*node_, leaves); }

Interval<double> Expr::propagate(std::span<const Interval<double>> leaves) const
{
    return prop_node(*node_, leaves);
}

double Expr::eval_node(const Node& n, std::span<const double> leaves)
{
    switch (n.op) {
    case Op::Leaf: return leaves[n.index];
    case Op::Add: return eval_node(*n.lhs, leaves) + eval_node(*n.rhs, leaves);
    case Op::Sub: return eval_node(*n.lhs, leaves) - eval_node(*n.rhs, leaves);
    case Op::Mul: return eval_node(*n.lhs, leaves) * eval_node(*n.rhs, leaves);
    case Op::Neg: return -eval_node(*n.lhs, leaves);
    }
    return 0.0;
}

Interval<double> Expr::prop_node(const Node& n, std::span<const Interval<double>> leaves)
{
    switch (n.op) {
    case Op::Leaf: return leaves[n.index];
    case Op::Add: return prop_node(*n.lhs, leaves) + prop_node(*n.rhs, leaves);
    case Op::Sub: return prop_node(*n.lhs, leaves) - prop_node(*n.rhs, leaves);
    case Op::Mul: return prop_node(*n.lhs, leaves) * prop_node(*n.rhs, leaves);
    case Op::Neg: return -prop_node(*n.lhs, leaves);
    }
    return {};
}

} // namespace ademu
