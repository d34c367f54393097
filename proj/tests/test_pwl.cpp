#include "ademu/fixed_point.hpp"
#include "ademu/pwl.hpp"

#include "support.hpp"

#include <Eigen/QR>
#include <doctest.h>

#include <cmath>
#include <vector>

using namespace ademu;

namespace {

SampledCurve sampled(double x0, double dx, int n, double (*f)(double))
{
    SampledCurve c;
    c.x0 = x0;
    c.dx = dx;
    c.y.resize(n);
    for (int k = 0; k < n; ++k)
        c.y[k] = f(x0 + k * dx);
    return c;
}

double ringing(double x) { return 1.0 - std::exp(-0.8 * x) * std::cos(3.0 * x); }

} // namespace

TEST_SUITE("pwl") {

TEST_CASE("minimax line of a parabola has the equioscillation error")
{
    std::vector<double> x, y;
    for (int i = 0; i <= 1000; ++i) {
        x.push_back(i / 1000.0);
        y.push_back(x.back() * x.back());
    }
    // best line to x^2 on [0,1] is x - 1/8, error 1/8
    const LineFit f = minimax_line(x, y, 0.0);
    CHECK(f.error == doctest::Approx(0.125).epsilon(1e-6));
    CHECK(f.slope == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(f.offset == doctest::Approx(-0.125).epsilon(1e-6));
}

TEST_CASE("minimax line is never worse than a least-squares line")
{
    auto g = test::rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = test::uniform_int(g, 3, 40);
        std::vector<double> x(n), y(n);
        for (int i = 0; i < n; ++i) {
            x[i] = i + test::uniform(g, 0.0, 0.5);
            y[i] = test::uniform(g, -1.0, 1.0);
        }
        const LineFit mm = minimax_line(x, y, x[0]);
        double err = 0.0;
        for (int i = 0; i < n; ++i)
            err = std::max(err, std::abs(mm.offset + mm.slope * (x[i] - x[0]) - y[i]));
        CHECK(err == doctest::Approx(mm.error).epsilon(1e-9));

        Eigen::MatrixXd A(n, 2);
        Eigen::VectorXd b(n);
        for (int i = 0; i < n; ++i) {
            A(i, 0) = 1.0;
            A(i, 1) = x[i] - x[0];
            b[i] = y[i];
        }
        const Eigen::Vector2d ls = A.colPivHouseholderQr().solve(b);
        CHECK(mm.error <= (A * ls - b).cwiseAbs().maxCoeff() + 1e-12);
    }
}

TEST_CASE("fit meets its tolerance on a dense scan")
{
    const SampledCurve c = sampled(0.0, 0.001, 8001, ringing);
    for (double tol : {1e-2, 1e-3, 1e-4}) {
        const FitResult r = fit_pwl(c, {0.5, 7.5}, tol);
        CHECK(r.report.max_abs_error < tol);
        CHECK(dense_scan_error(r.table, c) < tol);
        CHECK(r.table.domain().lo == 0.5);
        CHECK(r.table.domain().hi == doctest::Approx(7.5));
    }
}

TEST_CASE("doubling: segment counts are powers of two and grow as tolerance shrinks")
{
    const SampledCurve c = sampled(0.0, 0.001, 8001, ringing);
    Eigen::Index prev = 0;
    double prev_err = INFINITY;
    for (double tol = 0.1; tol > 1e-5; tol /= 3.0) {
        const FitResult r = fit_pwl(c, {0.0, 8.0}, tol);
        const auto n = r.report.n_segments;
        CHECK((n & (n - 1)) == 0);
        CHECK(n >= kMinSegments);
        CHECK(n >= prev);
        CHECK(r.report.max_abs_error <= prev_err);
        prev = n;
        prev_err = r.report.max_abs_error;
    }
}

TEST_CASE("unreachable tolerance raises FitError with the best attempt")
{
    const SampledCurve c = sampled(0.0, 0.001, 8001, ringing);
    try {
        fit_pwl(c, {0.0, 8.0}, 1e-9, 16);
        FAIL("expected FitError");
    } catch (const FitError& e) {
        CHECK(e.best().n_segments == 16);
        CHECK(e.best().max_abs_error > 1e-9);
    }
}

TEST_CASE("lookup clamps outside the domain and the right end is closed")
{
    const SampledCurve c = sampled(0.0, 0.01, 801, ringing);
    const PwlTable t = fit_pwl(c, {1.0, 5.0}, 1e-3).table;
    bool clamped = false;
    CHECK(segment_index(t, 1.0, &clamped) == 0);
    CHECK_FALSE(clamped);
    CHECK(segment_index(t, 5.0, &clamped) == t.n_segments() - 1);
    CHECK_FALSE(clamped);
    segment_index(t, 5.0001, &clamped);
    CHECK(clamped);
    clamped = false;
    segment_index(t, 0.999, &clamped);
    CHECK(clamped);
}

TEST_CASE("quantized lookup stays within half an lsb of offset plus slope terms")
{
    const SampledCurve c = sampled(0.0, 0.001, 8001, ringing);
    const PwlTable t = fit_pwl(c, {0.0, 8.0}, 1e-4).table;
    auto g = test::rng(12);
    for (int u : {6, 10, 14})
        for (int v : {4, 9, 13}) {
            const PwlTable q = quantize_table(t, u, v);
            REQUIRE(q.is_quantized());
            const double bound = std::ldexp(1.0, -u - 1) + std::ldexp(1.0, -v - 1) * t.seg_width;
            for (int i = 0; i < 2000; ++i) {
                const double x = test::uniform(g, 0.0, 8.0);
                CHECK(std::abs(eval_pwl_quantized(q, x) - eval_pwl(t, x)) <= bound * (1 + 1e-12));
            }
            // storage bits: n * (width(c) + width(d))
            const auto w = [](const VectorXi64& m) { return mantissa_width(m.minCoeff(), m.maxCoeff()); };
            CHECK(storage_bits(q) == q.n_segments() * (w(q.quantized_offsets) + w(q.quantized_slopes)));
            const PwlTable dq = dequantized(q, true, true);
            CHECK(eval_pwl(dq, 3.3) == doctest::Approx(eval_pwl_quantized(q, 3.3)).epsilon(1e-14));
        }
}

TEST_CASE("offset and slope bounds follow their closed forms")
{
    const SampledCurve c = sampled(0.0, 0.001, 8001, ringing);
    std::vector<PwlTable> taps;
    for (int k = 0; k < 3; ++k)
        taps.push_back(quantize_table(fit_pwl(c, {k * 2.0, k * 2.0 + 2.0}, 1e-3).table, 8 + k, 5 + k));
    const double R = 1.5;
    const double eA = R * (std::ldexp(1.0, -8) + std::ldexp(1.0, -9) + std::ldexp(1.0, -10 - 1));
    const double eB = R * (std::ldexp(1.0, -5) * taps[0].seg_width + std::ldexp(1.0, -6) * taps[1].seg_width +
                           std::ldexp(1.0, -7 - 1) * taps[2].seg_width);
    CHECK(bound_eA(taps, R) == doctest::Approx(eA));
    CHECK(bound_eB(taps, R) == doctest::Approx(eB));
}

TEST_CASE("trimmed domains cover every reachable age")
{
    auto g = test::rng(13);
    const double T = 0.125, J = 0.01;
    for (int k = 1; k <= 20; ++k) {
        const Domain d = trim_domain(k, T, J);
        CHECK(d.lo == doctest::Approx((k - 1) * (T - J)));
        CHECK(d.hi == doctest::Approx(k * (T + J)));
        // age of tap k at a time in [t_1, t_0): sum of k-1 periods plus part of one more
        for (int i = 0; i < 200; ++i) {
            double age = test::uniform(g, 0.0, 1.0) * test::uniform(g, T - J, T + J);
            for (int m = 0; m < k - 1; ++m)
                age += test::uniform(g, T - J, T + J);
            CHECK(age >= d.lo - 1e-12);
            CHECK(age <= d.hi + 1e-12);
        }
    }
    const Domain gd = trim_domain_gaussian(4, T, 0.002);
    CHECK(gd.lo == doctest::Approx(3 * T - 6 * 0.002 * std::sqrt(3.0)));
    CHECK(gd.hi == doctest::Approx(4 * T + 6 * 0.002 * 2));
    CHECK(trim_domain_gaussian(1, T, 0.002).lo == 0.0);
}

TEST_CASE("json round trip keeps the fixed-point image")
{
    const SampledCurve c = sampled(0.0, 0.001, 2001, ringing);
    const PwlTable q = quantize_table(fit_pwl(c, {0.0, 2.0}, 1e-3).table, 12, 10);
    const PwlTable back = pwl_from_json(nlohmann::json::parse(to_json(q).dump()));
    CHECK(back.t_start == q.t_start);
    CHECK(back.seg_width == q.seg_width);
    CHECK(back.offset_exp == 12);
    CHECK(back.slope_exp == 10);
    CHECK(back.quantized_offsets == q.quantized_offsets);
    CHECK(back.quantized_slopes == q.quantized_slopes);
    CHECK((back.offsets - q.offsets).cwiseAbs().maxCoeff() < 1e-15);
}

}
