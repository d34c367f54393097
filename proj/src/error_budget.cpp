#include "ademu/error_budget.hpp"

#include "ademu/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ademu {

double BudgetReport::single_half_tile_fraction() const
{
    if (half_tiles.empty())
        return 0.0;
    const auto ok = std::count_if(half_tiles.begin(), half_tiles.end(), [](std::int64_t h) { return h <= 1; });
    return static_cast<double>(ok) / static_cast<double>(half_tiles.size());
}

int min_exponent(double coeff, double share)
{
    if (!(share > 0.0))
        throw ContractViolation("min_exponent: share must be positive");
    if (coeff <= 0.0)
        return 0;
    int e = std::max(0, static_cast<int>(std::ceil(std::log2(coeff / share))));
    while (std::ldexp(coeff, -e) > share)
        ++e;
    while (e > 0 && std::ldexp(coeff, -(e - 1)) <= share)
        --e;
    return e;
}

StorageReport storage_report(std::span<const PwlTable> tables)
{
    StorageReport r;
    for (const auto& t : tables) {
        const std::int64_t b = storage_bits(t);
        r.bits.push_back(b);
        r.half_tiles.push_back((b + kHalfTileBits - 1) / kHalfTileBits);
        r.total_bits += b;
        r.total_half_tiles += r.half_tiles.back();
    }
    return r;
}

BoundSet realized_bounds(const StepResponse& F, std::span<const PwlTable> tables, std::span<const int> w,
                         std::span<const int> z, double dt_min_ns, double R)
{
    BoundSet b;
    b.eN = truncation_bound(F, static_cast<int>(tables.size()), dt_min_ns, R);
    b.eA = bound_eA(tables, R);
    b.eB = bound_eB(tables, R);
    b.eT = bound_eT(tables, w, R);
    b.eX = bound_eX(tables, z);
    return b;
}

Allocation allocate(const StepResponse& F, const ErrorBudget& budget, const TapGeometry& geo, double R,
                    const FitOptions& fit, std::optional<int> force_n)
{
    if (!(budget.total > 0.0) || !(budget.eN_share > 0.0 && budget.eN_share < 1.0))
        throw ConfigError("error budget: need total > 0 and 0 < eN_share < 1");
    if (!(R > 0.0))
        throw ConfigError("error budget: input bound R must be positive");

    BudgetReport rep;
    rep.swing = R * F.samples.cwiseAbs().maxCoeff();
    const double total_abs = budget.total * rep.swing;
    const double q = (1.0 - budget.eN_share) / 4.0 * total_abs;
    rep.shares = {budget.eN_share * total_abs, q, q, q, q};

    rep.n = force_n ? *force_n : choose_tap_count(F, geo.dt_min_ns(), R, rep.shares.eN);
    if (rep.n < 1)
        throw ConfigError("error budget: tap count must be at least 1");
    const auto n = static_cast<std::size_t>(rep.n);

    const double fit_tol = fit.tol_rel * std::max(F.swing(), 1e-300);
    TapTables tt = build_tap_tables(F, rep.n, geo.T_ns, geo.J_ns, fit_tol, fit.max_segments);
    for (const auto& r : tt.reports)
        rep.max_fit_error = std::max(rep.max_fit_error, r.max_abs_error);

    // equal split of each share across the n terms of its sum; the last term
    // of e_A, e_B carries half weight and of e_T the un-doubled one
    const double per = 1.0 / static_cast<double>(n);
    rep.u.resize(n);
    rep.v.resize(n);
    rep.w.resize(n);
    rep.z.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        const bool last = j + 1 == n;
        const PwlTable& t = tt.tables[j];
        rep.u[j] = min_exponent(R * (last ? 0.5 : 1.0), rep.shares.eA * per);
        rep.v[j] = min_exponent(R * t.seg_width * (last ? 0.5 : 1.0), rep.shares.eB * per);
        rep.w[j] = min_exponent(R * t.max_abs_slope() * (last ? 1.0 : 2.0), rep.shares.eT * per);
        double dx;
        if (j == 0) {
            const auto [lo, hi] = t.value_range();
            dx = std::max(std::abs(lo), std::abs(hi));
        } else {
            dx = std::max(range_gap(t, tt.tables[j - 1]), range_gap(tt.tables[j - 1], t));
        }
        rep.z[j] = min_exponent(std::max(dx, 0.0), rep.shares.eX * per);
    }

    Allocation out;
    out.tables.reserve(n);
    for (std::size_t j = 0; j < n; ++j)
        out.tables.push_back(quantize_table(std::move(tt.tables[j]), rep.u[j], rep.v[j]));

    rep.realized = realized_bounds(F, out.tables, rep.w, rep.z, geo.dt_min_ns(), R);
    const auto check = [](double got, double share, const char* name) {
        if (got > share * (1.0 + 1e-12))
            throw Error(std::string("error budget: ") + name + " = " + std::to_string(got) + " exceeds its share " +
                        std::to_string(share));
    };
    if (!force_n)
        check(rep.realized.eN, rep.shares.eN, "e_N");
    check(rep.realized.eA, rep.shares.eA, "e_A");
    check(rep.realized.eB, rep.shares.eB, "e_B");
    check(rep.realized.eT, rep.shares.eT, "e_T");
    check(rep.realized.eX, rep.shares.eX, "e_X");

    StorageReport s = storage_report(out.tables);
    rep.bits = std::move(s.bits);
    rep.half_tiles = std::move(s.half_tiles);
    rep.total_bits = s.total_bits;
    rep.total_half_tiles = s.total_half_tiles;
    out.report = std::move(rep);
    return out;
}

std::vector<SweepRow> sweep_eN_share(const StepResponse& F, double total, std::span<const double> shares,
                                     const TapGeometry& geo, double R, const FitOptions& fit)
{
    std::vector<SweepRow> rows;
    for (double s : shares) {
        SweepRow row;
        row.share = s;
        try {
            const Allocation a = allocate(F, {total, s}, geo, R, fit);
            row.n = a.report.n;
            row.total_bits = a.report.total_bits;
        } catch (const std::exception&) {
            row.ok = false;
        }
        rows.push_back(row);
    }
    return rows;
}

std::optional<SweepRow> best_share(std::span<const SweepRow> rows)
{
    std::optional<SweepRow> best;
    for (const auto& r : rows)
        if (r.ok && (!best || r.total_bits < best->total_bits))
            best = r;
    return best;
}

nlohmann::json to_json(const BudgetReport& r)
{
    const auto bounds = [](const BoundSet& b) {
        return nlohmann::json{{"eN", b.eN}, {"eA", b.eA}, {"eB", b.eB}, {"eT", b.eT}, {"eX", b.eX}, {"sum", b.sum()}};
    };
    return {
        {"n", r.n},
        {"swing", r.swing},
        {"shares", bounds(r.shares)},
        {"realized", bounds(r.realized)},
        {"u", r.u},
        {"v", r.v},
        {"w", r.w},
        {"z", r.z},
        {"bits", r.bits},
        {"half_tiles", r.half_tiles},
        {"total_bits", r.total_bits},
        {"total_half_tiles", r.total_half_tiles},
        {"single_half_tile_fraction", r.single_half_tile_fraction()},
        {"max_fit_error", r.max_fit_error},
    };
}

} // namespace ademu
