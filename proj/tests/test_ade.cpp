#include "ademu/ade.hpp"
#include "ademu/errors.hpp"
#include "ademu/oracle.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <vector>

using namespace ademu;

namespace {

// Unity-DC step with a 1 GHz ring, 1 ps sampling, 4 ns record.
StepResponse ringing_step()
{
    Eigen::VectorXd s(4001);
    for (Eigen::Index k = 0; k < s.size(); ++k) {
        const double t = k * 1e-12;
        s[k] = 1.0 - std::exp(-2e9 * t) * std::cos(2 * M_PI * 1e9 * t);
    }
    return make_step_response(1e-12, s, "ringing");
}

TimePoint ns(double v) { return TimePoint::from_ns(v); }

} // namespace

TEST_SUITE("ade") {

TEST_CASE("history is newest first and enforces its contract")
{
    InputHistory h(3, ns(0.1), ns(0.2), 1.0);
    h.push(ns(0.0), quantize_round(0.5, 8));
    h.push(ns(0.15), quantize_round(-0.5, 8));
    h.push(ns(0.30), quantize_round(1.0, 8));
    h.push(ns(0.45), quantize_round(0.25, 8));
    CHECK(h.size() == 3);
    CHECK(h[0].value.value() == 0.25);
    CHECK(h[1].value.value() == 1.0);
    CHECK(h[2].value.value() == -0.5);
    CHECK_THROWS_AS(h[3], ContractViolation);

    CHECK_THROWS_AS(h.push(ns(0.60), quantize_round(1.5, 8)), ContractViolation);  // |x| > R
    CHECK_THROWS_AS(h.push(ns(0.45), quantize_round(0.0, 8)), ContractViolation);  // not increasing
    CHECK_THROWS_AS(h.push(ns(0.50), quantize_round(0.0, 8)), ContractViolation);  // below dt_min
    CHECK_THROWS_AS(h.push(ns(0.70), quantize_round(0.0, 8)), ContractViolation);  // above dt_max
    InputHistory lax(3, ns(0.1), ns(0.2), 1.0, true);
    lax.push(ns(0.0), quantize_round(0.5, 8));
    CHECK_NOTHROW(lax.push(ns(5.0), quantize_round(0.5, 8)));
}

TEST_CASE("regrouped superposition equals the telescoped pulse sum")
{
    const StepResponse F = ringing_step();
    const auto tt = build_tap_tables(F, 12, 0.125, 0.01, 1e-4);
    auto g = test::rng(21);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t m = static_cast<std::size_t>(test::uniform_int(g, 1, 12));
        std::vector<double> ages(m), vals(m);
        double a = test::uniform(g, 0.0, 0.125);
        for (std::size_t j = 0; j < m; ++j) {
            ages[j] = a;
            vals[j] = test::uniform(g, -1.0, 1.0);
            a += test::uniform(g, 0.115, 0.135);
        }
        // x_1 F_1 + sum_{j>=2} x_j (F_j - F_{j-1})
        double ref = vals[0] * eval_pwl(tt.tables[0], ages[0]);
        for (std::size_t j = 1; j < m; ++j)
            ref += vals[j] * (eval_pwl(tt.tables[j], ages[j]) - eval_pwl(tt.tables[j - 1], ages[j - 1]));
        CHECK(superpose(tt.tables, ages, vals, false) == doctest::Approx(ref).epsilon(1e-12));
    }
}

TEST_CASE("with every tap inside the record the engine tracks the exact sum")
{
    const StepResponse F = ringing_step();
    const double T = 0.125, J = 0.01, tol = 1e-5;
    const int n = 36; // (n-1)(T-J) > 4 ns record
    REQUIRE(truncation_bound(F, n, T - J, 1.0) == 0.0);
    const auto tt = build_tap_tables(F, n, T, J, tol);
    Ade ade({tt.tables}, 1.0);
    InputHistory h(n, ns(T - J), ns(T + J), 1.0);
    std::vector<InputEvent> events;
    auto g = test::rng(22);
    double t = 0.0;
    double worst = 0.0;
    for (int i = 0; i < 400; ++i) {
        const double x = test::uniform(g, -1.0, 1.0);
        const TimePoint tp = ns(t);
        h.push(tp, quantize_round(x, 40));
        events.push_back({tp.to_ns(), h.latest().value.value()});
        const double next = t + test::uniform(g, T - J, T + J);
        for (int s = 0; s < 4; ++s) {
            const TimePoint q = ns(t + (next - t) * s / 4.0);
            worst = std::max(worst, std::abs(ade.evaluate(q, h) - exact_superposition(F, events, q.to_ns())));
        }
        t = next;
    }
    CHECK(worst <= 2.0 * tol * n);
    CHECK(worst < 1e-3);
    CHECK(ade.out_of_domain_count() == 0);
}

TEST_CASE("evaluation before the latest input is a contract violation")
{
    const StepResponse F = ringing_step();
    const auto tt = build_tap_tables(F, 4, 0.125, 0.0, 1e-3);
    Ade ade({tt.tables}, 1.0);
    InputHistory h(4, ns(0.125), ns(0.125), 1.0);
    h.push(ns(1.0), quantize_round(1.0, 8));
    CHECK_NOTHROW(ade.evaluate(ns(1.0), h));
    CHECK_THROWS_AS(ade.evaluate(ns(0.9), h), ContractViolation);
}

TEST_CASE("engine rejects mismatched settings and unquantized tables")
{
    const StepResponse F = ringing_step();
    const auto a = build_tap_tables(F, 4, 0.125, 0.0, 1e-3);
    const auto b = build_tap_tables(F, 5, 0.125, 0.0, 1e-3);
    CHECK_THROWS_AS(Ade({a.tables, b.tables}, 1.0), ContractViolation);
    CHECK_THROWS_AS(Ade({a.tables}, 1.0, true), ContractViolation);
    Ade ok({a.tables, a.tables}, 1.0);
    CHECK_THROWS(ok.set_setting(2));
    ok.set_setting(1);
    CHECK(ok.active_setting() == 1);
}

TEST_CASE("truncation bound shrinks with n and vanishes past the record")
{
    const StepResponse F = ringing_step();
    double prev = INFINITY;
    for (int n = 1; n <= 40; ++n) {
        const double b = truncation_bound(F, n, 0.115, 1.0);
        CHECK(b <= prev + 1e-15);
        CHECK(b >= 0.0);
        if ((n - 1) * 0.115 >= F.t_end() * 1e9)
            CHECK(b == 0.0);
        prev = b;
    }
    CHECK(truncation_bound(F, 5, 0.115, 2.0) == doctest::Approx(2.0 * truncation_bound(F, 5, 0.115, 1.0)));
}

TEST_CASE("chosen tap count is the smallest meeting the budget")
{
    const StepResponse F = ringing_step();
    for (double budget : {1e-1, 1e-2, 1e-3, 1e-4}) {
        const int n = choose_tap_count(F, 0.125, 1.0, budget);
        CHECK(truncation_bound(F, n, 0.125, 1.0) <= budget);
        if (n > 1)
            CHECK(truncation_bound(F, n - 1, 0.125, 1.0) > budget);
    }
}

TEST_CASE("time and value bounds follow their closed forms")
{
    const StepResponse F = ringing_step();
    const auto tt = build_tap_tables(F, 3, 0.125, 0.0, 1e-4);
    const std::vector<int> w{20, 21, 22}, z{9, 10, 11};
    const double R = 1.0;
    const auto& t = tt.tables;
    const double eT = R * (std::ldexp(t[0].max_abs_slope(), -20 + 1) + std::ldexp(t[1].max_abs_slope(), -21 + 1) +
                           std::ldexp(t[2].max_abs_slope(), -22));
    CHECK(bound_eT(t, w, R) == doctest::Approx(eT));

    const auto gap = [](const PwlTable& a, const PwlTable& b) {
        return a.value_range().second - b.value_range().first;
    };
    const double f1 = std::max(std::abs(t[0].value_range().first), std::abs(t[0].value_range().second));
    const double eX = std::ldexp(f1, -9) + std::ldexp(std::max(gap(t[1], t[0]), gap(t[0], t[1])), -10) +
                      std::ldexp(std::max(gap(t[2], t[1]), gap(t[1], t[2])), -11);
    CHECK(bound_eX(t, z) == doctest::Approx(eX));
}

}
