#pragma once

#include <algorithm>
#include <cassert>
#include <memory>
#include <span>
#include <variant>

namespace ademu {

/// Closed interval [lo, hi]. Arithmetic returns an enclosing interval.
template <typename Scalar>
struct Interval {
    Scalar lo{};
    Scalar hi{};

    constexpr Interval() = default;
    constexpr Interval(Scalar l, Scalar h) : lo(l), hi(h) { assert(l <= h); }
    static constexpr Interval point(Scalar v) { return {v, v}; }

    constexpr bool contains(Scalar v) const { return lo <= v && v <= hi; }
    constexpr Scalar width() const { return hi - lo; }
    constexpr Scalar magnitude() const { return std::max(lo < 0 ? -lo : lo, hi < 0 ? -hi : hi); }

    friend constexpr Interval operator+(const Interval& a, const Interval& b) { return {a.lo + b.lo, a.hi + b.hi}; }
    friend constexpr Interval operator-(const Interval& a, const Interval& b) { return {a.lo - b.hi, a.hi - b.lo}; }
    constexpr Interval operator-() const { return {-hi, -lo}; }

    // four-corner rule
    friend constexpr Interval operator*(const Interval& a, const Interval& b)
    {
        const Scalar p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
        return {std::min({p1, p2, p3, p4}), std::max({p1, p2, p3, p4})};
    }

    friend constexpr bool operator==(const Interval&, const Interval&) = default;
};

/// Smallest interval containing both arguments.
template <typename Scalar>
constexpr Interval<Scalar> hull(const Interval<Scalar>& a, const Interval<Scalar>& b)
{
    return {std::min(a.lo, b.lo), std::max(a.hi, b.hi)};
}

/// Expression tree over add/sub/mul/neg, evaluated either on concrete values or
/// on intervals. Leaves refer to an index into the caller's value array.
class Expr {
public:
    enum class Op { Leaf, Add, Sub, Mul, Neg };

    static Expr leaf(std::size_t index);

    friend Expr operator+(const Expr& a, const Expr& b) { return binary(Op::Add, a, b); }
    friend Expr operator-(const Expr& a, const Expr& b) { return binary(Op::Sub, a, b); }
    friend Expr operator*(const Expr& a, const Expr& b) { return binary(Op::Mul, a, b); }
    Expr operator-() const;

    Op op() const { return node_->op; }

    double evaluate(std::span<const double> leaves) const;
    Interval<double> propagate(std::span<const Interval<double>> leaves) const;

private:
    struct Node {
        Op op;
        std::size_t index = 0;
        std::shared_ptr<const Node> lhs, rhs;
    };
    explicit Expr(std::shared_ptr<const Node> n) : node_(std::move(n)) {}
    static Expr binary(Op op, const Expr& a, const Expr& b);

    static double eval_node(const Node& n, std::span<const double> leaves);
    static Interval<double> prop_node(const Node& n, std::span<const Interval<double>> leaves);

    std::shared_ptr<const Node> node_;
};

/// Interval enclosing every real evaluation of `expr` with leaves drawn from `leaves`.
inline Interval<double> interval_propagate(const Expr& expr, std::span<const Interval<double>> leaves)
{
    return expr.propagate(leaves);
}

} // namespace ademu
