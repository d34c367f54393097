#include "ademu/errors.hpp"
#include "ademu/fixed_point.hpp"
#include "ademu/interval.hpp"
#include "ademu/time_point.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace ademu;

TEST_SUITE("signal_core") {

TEST_CASE("round-to-nearest error is at most half an lsb")
{
    auto g = test::rng(1);
    for (int i = 0; i < 20000; ++i) {
        const double x = test::uniform(g, -50.0, 50.0);
        const int e = test::uniform_int(g, 0, 30);
        const FixedValue q = quantize_round(x, e);
        CHECK(std::abs(q.value() - x) <= std::ldexp(1.0, -e - 1));
        CHECK(q.exp == e);
    }
}

TEST_CASE("truncation floors toward minus infinity")
{
    auto g = test::rng(2);
    for (int i = 0; i < 20000; ++i) {
        const double x = test::uniform(g, -50.0, 50.0);
        const int e = test::uniform_int(g, 0, 30);
        const double err = x - quantize_trunc(x, e).value();
        CHECK(err >= 0.0);
        CHECK(err < std::ldexp(1.0, -e));
    }
    CHECK(quantize_trunc(-0.25, 1).mantissa == -1);
}

TEST_CASE("ties round away from zero")
{
    CHECK(quantize_round(2.5, 0).mantissa == 3);
    CHECK(quantize_round(-2.5, 0).mantissa == -3);
    CHECK(quantize_round(0.125, 2).mantissa == 1);
}

TEST_CASE("width overflow and non-finite input are rejected")
{
    CHECK(quantize_round(127.0, 0, 8).mantissa == 127);
    CHECK_THROWS_AS(quantize_round(128.0, 0, 8), FormatError);
    CHECK(quantize_round(-128.0, 0, 8).mantissa == -128);
    CHECK_THROWS_AS(quantize_round(-129.0, 0, 8), FormatError);
    CHECK_THROWS_AS(quantize_round(NAN, 4), FormatError);
    CHECK_THROWS_AS(quantize_round(1e30, 40), FormatError);
}

TEST_CASE("mantissa_width matches a brute-force search")
{
    const auto brute = [](std::int64_t lo, std::int64_t hi) {
        const bool is_signed = lo < 0;
        for (int w = 1; w < 64; ++w) {
            const std::int64_t mn = is_signed ? -(std::int64_t{1} << (w - 1)) : 0;
            const std::int64_t mx = is_signed ? (std::int64_t{1} << (w - 1)) - 1 : (std::int64_t{1} << w) - 1;
            if (lo >= mn && hi <= mx)
                return w;
        }
        return -1;
    };
    auto g = test::rng(3);
    for (int i = 0; i < 5000; ++i) {
        std::int64_t a = test::uniform_int(g, -100000, 100000) >> test::uniform_int(g, 0, 16);
        std::int64_t b = test::uniform_int(g, -100000, 100000) >> test::uniform_int(g, 0, 16);
        if (a > b)
            std::swap(a, b);
        CHECK(mantissa_width(a, b) == brute(a, b));
    }
}

TEST_CASE("choose_format covers the range and meets the relative target")
{
    auto g = test::rng(4);
    for (int i = 0; i < 2000; ++i) {
        const double a = test::uniform(g, -20.0, 20.0), b = test::uniform(g, -20.0, 20.0);
        const Interval<double> r{std::min(a, b), std::max(a, b)};
        const double target = std::ldexp(1.0, -test::uniform_int(g, 2, 20));
        const FixedFormat f = choose_format(r, target);
        CHECK(f.covers(r));
        CHECK(f.lsb() / 2 <= target * r.magnitude());
        if (f.frac_bits > 0) // one fewer fractional bit would miss the target
            CHECK(f.lsb() > target * r.magnitude());
    }
    CHECK_THROWS_AS(choose_format({0.0, 1.0}, 0.0), FormatError);
}

TEST_CASE("interval propagation encloses every sampled evaluation")
{
    auto g = test::rng(5);
    const Expr x = Expr::leaf(0), y = Expr::leaf(1), z = Expr::leaf(2);
    const std::vector<Expr> exprs{x * y - z, (x + y) * (x - z), -(x * x) + y * z, x * (y + z) * x};
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<Interval<double>> box;
        for (int k = 0; k < 3; ++k) {
            const double a = test::uniform(g, -3, 3), b = test::uniform(g, -3, 3);
            box.emplace_back(std::min(a, b), std::max(a, b));
        }
        for (const auto& e : exprs) {
            const Interval<double> r = interval_propagate(e, box);
            for (int s = 0; s < 50; ++s) {
                const double v[3] = {test::uniform(g, box[0].lo, box[0].hi), test::uniform(g, box[1].lo, box[1].hi),
                                     test::uniform(g, box[2].lo, box[2].hi)};
                const double val = e.evaluate(v);
                CHECK(r.contains(val));
            }
        }
    }
}

TEST_CASE("time points are exact integers on the 2^-exp grid")
{
    auto g = test::rng(6);
    for (int i = 0; i < 5000; ++i) {
        const double ns = test::uniform(g, 0.0, 1e4);
        const TimePoint t = TimePoint::from_ns(ns);
        CHECK(std::abs(t.to_ns() - ns) <= t.quantum_ns() / 2 + 1e-12 * ns);
        const TimePoint u = TimePoint::from_ns(test::uniform(g, 0.0, 1e4));
        CHECK(((t + u) - u) == t);
        CHECK((t < u) == (t.mantissa < u.mantissa));
    }
    CHECK(TimePoint::zero().quantum_ns() == std::ldexp(1.0, -32));
}

}
