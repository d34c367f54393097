#include "ademu/pwl.hpp"

#include "ademu/errors.hpp"
#include "ademu/fixed_point.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

namespace ademu {

double SampledCurve::value_at(double x) const
{
    const Eigen::Index n = y.size();
    if (n == 0)
        return 0.0;
    const double pos = (x - x0) / dx;
    if (pos <= 0.0)
        return y[0];
    if (pos >= static_cast<double>(n - 1))
        return y[n - 1];
    const auto i = static_cast<Eigen::Index>(pos);
    const double frac = pos - static_cast<double>(i);
    return y[i] + frac * (y[i + 1] - y[i]);
}

SampledCurve step_curve_ns(const StepResponse& F)
{
    return {0.0, F.dt * 1e9, F.samples};
}

std::pair<double, double> PwlTable::value_range() const
{
    const Eigen::VectorXd ends = offsets + slopes * seg_width;
    return {std::min(offsets.minCoeff(), ends.minCoeff()), std::max(offsets.maxCoeff(), ends.maxCoeff())};
}

// --- minimax line ------------------------------------------------------------

namespace {

struct Pt {
    double x, y;
};

double cross(const Pt& o, const Pt& a, const Pt& b)
{
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

// Andrew's monotone chain on x-sorted points.
std::vector<Pt> half_hull(const std::vector<Pt>& pts, bool upper)
{
    std::vector<Pt> h;
    for (const Pt& p : pts) {
        while (h.size() >= 2) {
            const double c = cross(h[h.size() - 2], h.back(), p);
            if ((upper && c >= 0.0) || (!upper && c <= 0.0))
                h.pop_back();
            else
                break;
        }
        h.push_back(p);
    }
    return h;
}

} // namespace

LineFit minimax_line(std::span<const double> x, std::span<const double> y, double x_ref)
{
    if (x.size() != y.size() || x.empty())
        throw ContractViolation("minimax_line: need matching, nonempty inputs");

    std::vector<Pt> pts(x.size());
    for (std::size_t i = 0; i < x.size(); ++i)
        pts[i] = {x[i] - x_ref, y[i]};
    std::stable_sort(pts.begin(), pts.end(), [](const Pt& a, const Pt& b) { return a.x < b.x; });

    const std::vector<Pt> upper = half_hull(pts, true);
    const std::vector<Pt> lower = half_hull(pts, false);

    // vertical width of the point set as a function of slope; convex
    const auto spread = [&](double b, double* mid) {
        double hi = -std::numeric_limits<double>::infinity();
        double lo = std::numeric_limits<double>::infinity();
        for (const Pt& p : upper)
            hi = std::max(hi, p.y - b * p.x);
        for (const Pt& p : lower)
            lo = std::min(lo, p.y - b * p.x);
        if (mid)
            *mid = 0.5 * (hi + lo);
        return hi - lo;
    };

    std::vector<double> cand;
    const auto add_edges = [&](const std::vector<Pt>& h) {
        for (std::size_t i = 1; i < h.size(); ++i) {
            const double dx = h[i].x - h[i - 1].x;
            if (dx > 0.0)
                cand.push_back((h[i].y - h[i - 1].y) / dx);
        }
    };
    add_edges(upper);
    add_edges(lower);
    if (cand.empty())
        cand.push_back(0.0);
    std::sort(cand.begin(), cand.end());

    // the minimum of a convex piecewise-linear function sits on a breakpoint
    std::size_t lo = 0, hi = cand.size() - 1;
    while (hi - lo > 2) {
        const std::size_t m1 = lo + (hi - lo) / 3;
        const std::size_t m2 = hi - (hi - lo) / 3;
        if (spread(cand[m1], nullptr) <= spread(cand[m2], nullptr))
            hi = m2;
        else
            lo = m1;
    }
    double best_b = cand[lo];
    double best_w = spread(best_b, nullptr);
    for (std::size_t i = lo + 1; i <= hi; ++i) {
        const double w = spread(cand[i], nullptr);
        if (w < best_w) {
            best_w = w;
            best_b = cand[i];
        }
    }
    double mid = 0.0;
    spread(best_b, &mid);
    return {mid, best_b, 0.5 * best_w};
}

// --- fitting -----------------------------------------------------------------

namespace {

struct SegmentFit {
    double offset, slope, error;
};

SegmentFit fit_segment(const SampledCurve& c, double s_lo, double s_hi)
{
    std::vector<double> xs, ys;
    xs.push_back(s_lo);
    ys.push_back(c.value_at(s_lo));
    const Eigen::Index n = c.y.size();
    auto k0 = static_cast<Eigen::Index>(std::ceil((s_lo - c.x0) / c.dx));
    k0 = std::clamp<Eigen::Index>(k0, 0, n);
    for (Eigen::Index k = k0; k < n; ++k) {
        const double xk = c.x0 + c.dx * static_cast<double>(k);
        if (xk <= s_lo)
            continue;
        if (xk >= s_hi)
            break;
        xs.push_back(xk);
        ys.push_back(c.y[k]);
    }
    xs.push_back(s_hi);
    ys.push_back(c.value_at(s_hi));
    const LineFit f = minimax_line(xs, ys, s_lo);
    return {f.offset, f.slope, f.error};
}

} // namespace

FitResult fit_pwl(const SampledCurve& curve, Domain domain, double tol_abs, Eigen::Index max_segments)
{
    if (!(domain.hi > domain.lo))
        throw ContractViolation("fit_pwl: empty domain");
    if (!(tol_abs > 0.0))
        throw ContractViolation("fit_pwl: tolerance must be positive");
    if (curve.y.size() == 0)
        throw ContractViolation("fit_pwl: empty curve");
    max_segments = std::min(max_segments, kMaxSegments);

    FitResult best;
    int iterations = 0;
    for (Eigen::Index nseg = kMinSegments;; nseg *= 2) {
        ++iterations;
        PwlTable t;
        t.t_start = domain.lo;
        t.seg_width = domain.width() / static_cast<double>(nseg);
        t.offsets.resize(nseg);
        t.slopes.resize(nseg);
        double err = 0.0;
        for (Eigen::Index i = 0; i < nseg; ++i) {
            const double s_lo = t.t_start + t.seg_width * static_cast<double>(i);
            const double s_hi = (i + 1 == nseg) ? domain.hi : s_lo + t.seg_width;
            const SegmentFit f = fit_segment(curve, s_lo, s_hi);
            t.offsets[i] = f.offset;
            t.slopes[i] = f.slope;
            err = std::max(err, f.error);
        }
        best.table = std::move(t);
        best.report = {err, nseg, iterations, 0};
        if (err < tol_abs)
            break;
        if (nseg * 2 > max_segments) {
            best.report.max_abs_error = std::max(err, dense_scan_error(best.table, curve));
            throw FitError("fit_pwl: tolerance not reached with " + std::to_string(nseg) + " segments",
                           best.report);
        }
    }
    best.report.max_abs_error = std::max(best.report.max_abs_error, dense_scan_error(best.table, curve));
    return best;
}

FitResult fit_pwl(const StepResponse& F, Domain domain_ns, double tol_abs, Eigen::Index max_segments)
{
    return fit_pwl(step_curve_ns(F), domain_ns, tol_abs, max_segments);
}

double dense_scan_error(const PwlTable& table, const SampledCurve& curve, int oversample)
{
    const Domain d = table.domain();
    const double step = std::min(curve.dx / oversample, table.seg_width / 64.0);
    const auto n = static_cast<Eigen::Index>(std::ceil(d.width() / step));
    double err = 0.0;
    for (Eigen::Index k = 0; k <= n; ++k) {
        const double x = std::min(d.lo + step * static_cast<double>(k), d.hi);
        err = std::max(err, std::abs(eval_pwl(table, x) - curve.value_at(x)));
    }
    return err;
}

// --- evaluation --------------------------------------------------------------

Eigen::Index segment_index(const PwlTable& table, double x, bool* clamped)
{
    const Eigen::Index n = table.n_segments();
    const Domain d = table.domain();
    const bool outside = x < d.lo || x > d.hi;
    if (clamped)
        *clamped = outside;
    auto i = static_cast<Eigen::Index>(std::floor((x - table.t_start) / table.seg_width));
    i = std::clamp<Eigen::Index>(i, 0, n - 1);
    // settle floating-point ties on segment boundaries
    if (i > 0 && x < table.t_start + table.seg_width * static_cast<double>(i))
        --i;
    else if (i + 1 < n && x >= table.t_start + table.seg_width * static_cast<double>(i + 1))
        ++i;
    return i;
}

double eval_pwl(const PwlTable& table, double x, bool* clamped)
{
    const Eigen::Index i = segment_index(table, x, clamped);
    const double local = x - (table.t_start + table.seg_width * static_cast<double>(i));
    return table.offsets[i] + table.slopes[i] * local;
}

double eval_pwl_quantized(const PwlTable& table, double x, bool* clamped)
{
    if (!table.is_quantized())
        throw ContractViolation("eval_pwl_quantized: table has no fixed-point coefficients");
    const Eigen::Index i = segment_index(table, x, clamped);
    const double local = x - (table.t_start + table.seg_width * static_cast<double>(i));
    const double a = std::ldexp(static_cast<double>(table.quantized_offsets[i]), -table.offset_exp);
    const double b = std::ldexp(static_cast<double>(table.quantized_slopes[i]), -table.slope_exp);
    return a + b * local;
}

PwlTable quantize_table(PwlTable table, int u, int v)
{
    const Eigen::Index n = table.n_segments();
    table.offset_exp = u;
    table.slope_exp = v;
    table.quantized_offsets.resize(n);
    table.quantized_slopes.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        table.quantized_offsets[i] = quantize_round(table.offsets[i], u).mantissa;
        table.quantized_slopes[i] = quantize_round(table.slopes[i], v).mantissa;
    }
    return table;
}

PwlTable dequantized(const PwlTable& table, bool offsets, bool slopes)
{
    if (!table.is_quantized())
        throw ContractViolation("dequantized: table has no fixed-point coefficients");
    PwlTable out = table;
    for (Eigen::Index i = 0; i < table.n_segments(); ++i) {
        if (offsets)
            out.offsets[i] = std::ldexp(static_cast<double>(table.quantized_offsets[i]), -table.offset_exp);
        if (slopes)
            out.slopes[i] = std::ldexp(static_cast<double>(table.quantized_slopes[i]), -table.slope_exp);
    }
    return out;
}

std::int64_t storage_bits(const PwlTable& table)
{
    if (!table.is_quantized())
        return 0;
    const int wc = mantissa_width(table.quantized_offsets.minCoeff(), table.quantized_offsets.maxCoeff());
    const int wd = mantissa_width(table.quantized_slopes.minCoeff(), table.quantized_slopes.maxCoeff());
    return static_cast<std::int64_t>(table.n_segments()) * (wc + wd);
}

// --- bounds ------------------------------------------------------------------

double bound_eA(std::span<const PwlTable> tables, double R)
{
    if (tables.empty())
        return 0.0;
    double sum = std::ldexp(1.0, -tables.back().offset_exp - 1);
    for (std::size_t j = 0; j + 1 < tables.size(); ++j)
        sum += std::ldexp(1.0, -tables[j].offset_exp);
    return R * sum;
}

double bound_eB(std::span<const PwlTable> tables, double R)
{
    if (tables.empty())
        return 0.0;
    double sum = std::ldexp(1.0, -tables.back().slope_exp - 1) * tables.back().seg_width;
    for (std::size_t j = 0; j + 1 < tables.size(); ++j)
        sum += std::ldexp(1.0, -tables[j].slope_exp) * tables[j].seg_width;
    return R * sum;
}

// --- domain trimming ---------------------------------------------------------

Domain trim_domain(int k, double T, double J)
{
    if (k < 1)
        throw ContractViolation("trim_domain: tap index starts at 1");
    if (!(J >= 0.0 && J < T))
        throw ContractViolation("trim_domain: need 0 <= J < T");
    return {(k - 1) * (T - J), k * (T + J)};
}

Domain trim_domain_gaussian(int k, double T, double sigma)
{
    if (k < 1)
        throw ContractViolation("trim_domain_gaussian: tap index starts at 1");
    if (!(sigma >= 0.0))
        throw ContractViolation("trim_domain_gaussian: sigma must be non-negative");
    const double lo = (k - 1) * T - 6.0 * sigma * std::sqrt(static_cast<double>(k - 1));
    const double hi = k * T + 6.0 * sigma * std::sqrt(static_cast<double>(k));
    return {std::max(0.0, lo), hi};
}

// --- serialization -----------------------------------------------------------

namespace {

template <typename V>
nlohmann::json to_array(const V& v)
{
    auto a = nlohmann::json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v[i]);
    return a;
}

} // namespace

nlohmann::json to_json(const PwlTable& t)
{
    nlohmann::json j;
    j["t_start"] = t.t_start;
    j["seg_width"] = t.seg_width;
    j["n_segments"] = t.n_segments();
    j["offsets"] = to_array(t.offsets);
    j["slopes"] = to_array(t.slopes);
    if (t.is_quantized()) {
        j["offset_exp"] = t.offset_exp;
        j["slope_exp"] = t.slope_exp;
        j["quantized_offsets"] = to_array(t.quantized_offsets);
        j["quantized_slopes"] = to_array(t.quantized_slopes);
    }
    return j;
}

PwlTable pwl_from_json(const nlohmann::json& j)
{
    try {
        PwlTable t;
        t.t_start = j.at("t_start").get<double>();
        t.seg_width = j.at("seg_width").get<double>();
        const auto a = j.at("offsets").get<std::vector<double>>();
        const auto b = j.at("slopes").get<std::vector<double>>();
        if (a.size() != b.size() || a.empty())
            throw ParseError("pwl table: offsets/slopes size mismatch");
        t.offsets = Eigen::Map<const Eigen::VectorXd>(a.data(), static_cast<Eigen::Index>(a.size()));
        t.slopes = Eigen::Map<const Eigen::VectorXd>(b.data(), static_cast<Eigen::Index>(b.size()));
        if (j.contains("quantized_offsets")) {
            t.offset_exp = j.at("offset_exp").get<int>();
            t.slope_exp = j.at("slope_exp").get<int>();
            const auto c = j.at("quantized_offsets").get<std::vector<std::int64_t>>();
            const auto d = j.at("quantized_slopes").get<std::vector<std::int64_t>>();
            if (c.size() != a.size() || d.size() != a.size())
                throw ParseError("pwl table: quantized arrays size mismatch");
            t.quantized_offsets = Eigen::Map<const VectorXi64>(c.data(), static_cast<Eigen::Index>(c.size()));
            t.quantized_slopes = Eigen::Map<const VectorXi64>(d.data(), static_cast<Eigen::Index>(d.size()));
        }
        return t;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("pwl table: ") + e.what());
    }
}

} // namespace ademu
