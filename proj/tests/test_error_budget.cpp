#include "ademu/ade.hpp"
#include "ademu/error_budget.hpp"
#include "ademu/errors.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace ademu;

namespace {

StepResponse link_like_step()
{
    const ChannelParams ch = default_channel();
    const StepResponse c = synth_channel_step(ch, 2e-12, 8e-9);
    return make_ctle_family(c, default_ctle_family())[9];
}

} // namespace

TEST_SUITE("error_budget") {

TEST_CASE("min_exponent is the smallest non-negative exponent meeting the share")
{
    auto g = test::rng(51);
    for (int i = 0; i < 5000; ++i) {
        const double coeff = std::ldexp(test::uniform(g, 0.5, 1.0), test::uniform_int(g, -20, 20));
        const double share = std::ldexp(test::uniform(g, 0.5, 1.0), test::uniform_int(g, -30, 5));
        int brute = 0;
        while (std::ldexp(coeff, -brute) > share)
            ++brute;
        CHECK(min_exponent(coeff, share) == brute);
    }
    CHECK(min_exponent(0.0, 1e-3) == 0);
    CHECK(min_exponent(1.0, 1.0) == 0);
    CHECK(min_exponent(1.0, 0.5) == 1);
    CHECK_THROWS_AS(min_exponent(1.0, 0.0), ContractViolation);
}

TEST_CASE("allocation meets every share and reports consistent storage")
{
    const StepResponse F = link_like_step();
    const ErrorBudget budget{1e-3, 0.6};
    const TapGeometry geo{0.125, 0.0};
    const Allocation a = allocate(F, budget, geo, 1.0);
    const BudgetReport& r = a.report;
    CHECK(r.swing == doctest::Approx(F.samples.cwiseAbs().maxCoeff()));
    const double total = budget.total * r.swing;
    CHECK(r.shares.eN == doctest::Approx(0.6 * total));
    CHECK(r.shares.eA == doctest::Approx(0.1 * total));
    CHECK(r.shares.sum() == doctest::Approx(total));
    CHECK(r.realized.eN <= r.shares.eN);
    CHECK(r.realized.eA <= r.shares.eA);
    CHECK(r.realized.eB <= r.shares.eB);
    CHECK(r.realized.eT <= r.shares.eT);
    CHECK(r.realized.eX <= r.shares.eX);
    REQUIRE(a.tables.size() == static_cast<std::size_t>(r.n));
    CHECK(r.n == choose_tap_count(F, geo.dt_min_ns(), 1.0, r.shares.eN));

    const StorageReport s = storage_report(a.tables);
    CHECK(s.total_bits == r.total_bits);
    std::int64_t sum = 0;
    for (std::size_t j = 0; j < a.tables.size(); ++j) {
        CHECK(a.tables[j].is_quantized());
        CHECK(a.tables[j].offset_exp == r.u[j]);
        CHECK(a.tables[j].slope_exp == r.v[j]);
        CHECK(r.half_tiles[j] == (r.bits[j] + kHalfTileBits - 1) / kHalfTileBits);
        sum += r.bits[j];
    }
    CHECK(sum == r.total_bits);
    CHECK(r.max_fit_error < budget.total * F.swing());
}

TEST_CASE("realized bounds recompute from the exponents alone")
{
    const StepResponse F = link_like_step();
    const Allocation a = allocate(F, {1e-3, 0.6}, {0.125, 0.0}, 1.0);
    const BoundSet b = realized_bounds(F, a.tables, a.report.w, a.report.z, 0.125, 1.0);
    CHECK(b.eN == doctest::Approx(a.report.realized.eN));
    CHECK(b.eA == doctest::Approx(bound_eA(a.tables, 1.0)));
    CHECK(b.eB == doctest::Approx(bound_eB(a.tables, 1.0)));
    CHECK(b.eT == doctest::Approx(bound_eT(a.tables, a.report.w, 1.0)));
    CHECK(b.eX == doctest::Approx(bound_eX(a.tables, a.report.z)));
}

TEST_CASE("a tighter budget never needs fewer taps or bits")
{
    const StepResponse F = link_like_step();
    int prev_n = 0;
    std::int64_t prev_bits = 0;
    for (double total : {1e-2, 3e-3, 1e-3, 3e-4}) {
        const Allocation a = allocate(F, {total, 0.6}, {0.125, 0.0}, 1.0);
        CHECK(a.report.n >= prev_n);
        CHECK(a.report.total_bits >= prev_bits);
        prev_n = a.report.n;
        prev_bits = a.report.total_bits;
    }
}

TEST_CASE("a forced tap count above the minimum keeps e_N within its share")
{
    const StepResponse F = link_like_step();
    const Allocation a = allocate(F, {1e-3, 0.6}, {0.125, 0.0}, 1.0, {}, 85);
    CHECK(a.report.n == 85);
    CHECK(a.report.realized.eN <= a.report.shares.eN);
    CHECK(a.report.single_half_tile_fraction() >= 0.9);
}

TEST_CASE("share sweep reports every share and picks the cheapest")
{
    const StepResponse F = link_like_step();
    const std::vector<double> shares{0.2, 0.5, 0.8};
    const auto rows = sweep_eN_share(F, 1e-3, shares, {0.125, 0.0}, 1.0);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].share == shares[i]);
        CHECK(rows[i].ok);
    }
    // a larger e_N share never needs more taps
    CHECK(rows[0].n >= rows[1].n);
    CHECK(rows[1].n >= rows[2].n);
    const auto best = best_share(rows);
    REQUIRE(best.has_value());
    for (const auto& r : rows)
        CHECK(best->total_bits <= r.total_bits);
    CHECK_FALSE(best_share(std::vector<SweepRow>{{0.5, 0, 0, false}}).has_value());
}

TEST_CASE("budget report serializes its exponents")
{
    const StepResponse F = link_like_step();
    const Allocation a = allocate(F, {1e-3, 0.6}, {0.125, 0.0}, 1.0);
    const auto j = to_json(a.report);
    CHECK(j.at("n").get<int>() == a.report.n);
    CHECK(j.at("u").size() == static_cast<std::size_t>(a.report.n));
    CHECK(j.at("total_bits").get<std::int64_t>() == a.report.total_bits);
}

}
