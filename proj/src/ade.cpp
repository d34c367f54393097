#include "ademu/ade.hpp"

#include "ademu/errors.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ademu {

// --- history -----------------------------------------------------------------

InputHistory::InputHistory(std::size_t capacity, TimePoint dt_min, TimePoint dt_max, double R, bool allow_long_gaps)
    : buf_(capacity), dt_min_(dt_min), dt_max_(dt_max), R_(R), allow_long_gaps_(allow_long_gaps)
{
    if (capacity == 0)
        throw ContractViolation("input history: capacity must be at least 1");
    if (dt_min.mantissa <= 0 || dt_max < dt_min)
        throw ContractViolation("input history: need 0 < dt_min <= dt_max");
    if (!(R > 0.0))
        throw ContractViolation("input history: bound R must be positive");
}

void InputHistory::push(TimePoint t, FixedValue x)
{
    if (std::abs(x.value()) > R_)
        throw ContractViolation("input history: |x| = " + std::to_string(std::abs(x.value())) + " exceeds R");
    if (size_ > 0) {
        const TimePoint gap = t - latest().time;
        if (gap.mantissa <= 0)
            throw ContractViolation("input history: time not increasing");
        if (gap < dt_min_)
            throw ContractViolation("input history: spacing " + std::to_string(gap.to_ns()) + " ns below dt_min");
        if (gap > dt_max_ && !allow_long_gaps_)
            throw ContractViolation("input history: spacing " + std::to_string(gap.to_ns()) + " ns above dt_max");
    }
    head_ = size_ == 0 ? 0 : (head_ + 1) % buf_.size();
    buf_[head_] = {t, x};
    size_ = std::min(size_ + 1, buf_.size());
}

const HistoryEntry& InputHistory::operator[](std::size_t j) const
{
    if (j >= size_)
        throw ContractViolation("input history: index out of range");
    return buf_[(head_ + buf_.size() - j) % buf_.size()];
}

// --- evaluation --------------------------------------------------------------

double superpose(std::span<const PwlTable> taps, std::span<const double> ages_ns, std::span<const double> values,
                 bool quantized, std::uint64_t* clamps)
{
    const std::size_t m = std::min(ages_ns.size(), values.size());
    if (m > taps.size())
        throw ContractViolation("superpose: more history entries than taps");

    // y = sum_{j<m} F_j (x_j - x_{j+1}) + x_m F_m, the same sum regrouped so
    // each tap value is read once
    double y = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        bool c = false;
        const double f = quantized ? eval_pwl_quantized(taps[j], ages_ns[j], &c) : eval_pwl(taps[j], ages_ns[j], &c);
        if (c && clamps)
            ++*clamps;
        const double next = j + 1 < m ? values[j + 1] : 0.0;
        y += f * (values[j] - next);
    }
    return y;
}

Ade::Ade(std::vector<std::vector<PwlTable>> tables, double R, bool use_quantized)
    : tables_(std::move(tables)), R_(R), quantized_(use_quantized)
{
    if (tables_.empty() || tables_.front().empty())
        throw ContractViolation("ade: need at least one setting with one tap");
    const auto& ref = tables_.front();
    for (std::size_t s = 0; s < tables_.size(); ++s) {
        if (tables_[s].size() != ref.size())
            throw ContractViolation("ade: setting " + std::to_string(s) + " has a different tap count");
        for (std::size_t j = 0; j < ref.size(); ++j) {
            const Domain a = tables_[s][j].domain(), b = ref[j].domain();
            if (std::abs(a.lo - b.lo) > 1e-9 * std::max(1.0, b.width()) ||
                std::abs(a.hi - b.hi) > 1e-9 * std::max(1.0, b.width()))
                throw ContractViolation("ade: setting " + std::to_string(s) + " tap " + std::to_string(j + 1) +
                                        " domain differs");
            if (use_quantized && !tables_[s][j].is_quantized())
                throw ContractViolation("ade: quantized evaluation requested on unquantized tables");
        }
    }
    ages_.reserve(ref.size());
    values_.reserve(ref.size());
}

void Ade::set_setting(std::size_t code)
{
    if (code >= tables_.size())
        throw ContractViolation("ade: setting " + std::to_string(code) + " out of range");
    active_ = code;
}

void Ade::set_value_exponents(std::vector<int> z)
{
    if (!z.empty() && z.size() != tap_count())
        throw ContractViolation("ade: need one value exponent per tap");
    value_exp_ = std::move(z);
}

double Ade::evaluate(TimePoint t, const InputHistory& h)
{
    const std::size_t m = std::min(h.size(), tap_count());
    if (m > 0 && t < h.latest().time)
        throw ContractViolation("ade: evaluation time precedes the latest input");
    ages_.resize(m);
    values_.resize(m);
    for (std::size_t j = 0; j < m; ++j) {
        const HistoryEntry& e = h[j];
        ages_[j] = (t - e.time).to_ns();
        values_[j] = value_exp_.empty() ? e.value.value() : quantize_trunc(e.value.value(), value_exp_[j]).value();
    }
    return superpose(tables_[active_], ages_, values_, quantized_, &clamps_);
}

// --- construction ------------------------------------------------------------

TapTables build_tap_tables(const StepResponse& F, int n, double T_ns, double J_ns, double tol_abs,
                           Eigen::Index max_segments)
{
    if (n < 1)
        throw ContractViolation("build_tap_tables: n must be at least 1");
    const SampledCurve curve = step_curve_ns(F);
    TapTables out;
    out.tables.reserve(static_cast<std::size_t>(n));
    out.reports.reserve(static_cast<std::size_t>(n));
    for (int k = 1; k <= n; ++k) {
        FitResult r = fit_pwl(curve, trim_domain(k, T_ns, J_ns), tol_abs, max_segments);
        out.tables.push_back(std::move(r.table));
        out.reports.push_back(r.report);
    }
    return out;
}

// --- bounds ------------------------------------------------------------------

double truncation_bound(const StepResponse& F, int n, double dt_min_ns, double R)
{
    if (n < 1)
        throw ContractViolation("truncation_bound: n must be at least 1");
    const double tau0 = (n - 1) * dt_min_ns * 1e-9;
    if (tau0 >= F.t_end())
        return 0.0;
    double prev = F.value_at(tau0);
    double sum = 0.0;
    for (double tau : local_extrema(F, tau0)) {
        const double v = F.value_at(tau);
        sum += std::abs(v - prev);
        prev = v;
    }
    return R * sum;
}

int choose_tap_count(const StepResponse& F, double dt_min_ns, double R, double budget)
{
    if (!(budget > 0.0))
        throw ContractViolation("choose_tap_count: budget must be positive");
    if (!(dt_min_ns > 0.0))
        throw ContractViolation("choose_tap_count: dt_min must be positive");
    // the tail variation only shrinks as tau0 grows, so the first hit is minimal
    for (int n = 1; (n - 1) * dt_min_ns * 1e-9 < F.t_end(); ++n)
        if (truncation_bound(F, n, dt_min_ns, R) <= budget)
            return n;
    throw Error("choose_tap_count: truncation budget " + std::to_string(budget) +
                " not reachable within the step-response record");
}

double bound_eT(std::span<const PwlTable> tables, std::span<const int> w, double R)
{
    if (w.size() != tables.size())
        throw ContractViolation("bound_eT: need one time exponent per tap");
    const std::size_t n = tables.size();
    if (n == 0)
        return 0.0;
    double sum = std::ldexp(tables[n - 1].max_abs_slope(), -w[n - 1]);
    for (std::size_t j = 0; j + 1 < n; ++j)
        sum += std::ldexp(tables[j].max_abs_slope(), -w[j] + 1);
    return R * sum;
}

double range_gap(const PwlTable& Fi, const PwlTable& Fj)
{
    return Fi.value_range().second - Fj.value_range().first;
}

double bound_eX(std::span<const PwlTable> tables, std::span<const int> z)
{
    if (z.size() != tables.size())
        throw ContractViolation("bound_eX: need one value exponent per tap");
    if (tables.empty())
        return 0.0;
    const auto [lo1, hi1] = tables[0].value_range();
    double sum = std::ldexp(std::max(std::abs(lo1), std::abs(hi1)), -z[0]);
    for (std::size_t j = 1; j < tables.size(); ++j) {
        const double d = std::max(range_gap(tables[j], tables[j - 1]), range_gap(tables[j - 1], tables[j]));
        sum += std::ldexp(d, -z[j]);
    }
    return sum;
}

} // namespace ademu
