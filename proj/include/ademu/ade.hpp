#pragma once

#include "ademu/fixed_point.hpp"
#include "ademu/pwl.hpp"
#include "ademu/step_response.hpp"
#include "ademu/time_point.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace ademu {

struct HistoryEntry {
    TimePoint time;
    FixedValue value;
};

/// The n most recent input steps, index 0 = most recent (j = 1).
///
/// Successive step times must be separated by [dt_min, dt_max]. Longer gaps
/// are accepted only when `allow_long_gaps` is set, which the caller does
/// once the step response has settled inside the tap span.
class InputHistory {
public:
    InputHistory(std::size_t capacity, TimePoint dt_min, TimePoint dt_max, double R, bool allow_long_gaps = false);

    void push(TimePoint t, FixedValue x);
    void clear() { size_ = 0; }

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return buf_.size(); }
    bool empty() const { return size_ == 0; }
    const HistoryEntry& operator[](std::size_t j) const;
    const HistoryEntry& latest() const { return (*this)[0]; }

    TimePoint dt_min() const { return dt_min_; }
    TimePoint dt_max() const { return dt_max_; }
    double bound() const { return R_; }

private:
    std::vector<HistoryEntry> buf_;
    std::size_t head_ = 0; // slot of the most recent entry
    std::size_t size_ = 0;
    TimePoint dt_min_, dt_max_;
    double R_;
    bool allow_long_gaps_;
};

/// Truncated pulse-response superposition for one set of tap tables.
///
///   y = x_1 F_1(a_1) + sum_{j>=2} x_j (F_j(a_j) - F_{j-1}(a_{j-1}))
///
/// with a_j = t - t_j in ns. F_{j-1}(a_{j-1}) is the value tap j-1 already
/// produced, so each table is read once. `ages_ns` and `values` may be shorter
/// than `taps` (partially filled history). Returns the number of table reads
/// that fell outside their domain through `clamps`.
double superpose(std::span<const PwlTable> taps, std::span<const double> ages_ns, std::span<const double> values,
                 bool quantized, std::uint64_t* clamps = nullptr);

/// Analog dynamics engine: per-setting tap tables plus evaluation against an
/// input history.
class Ade {
public:
    /// `tables[s][j]` is tap j+1 of setting s. Every setting must have the same
    /// tap count and tap domains.
    Ade(std::vector<std::vector<PwlTable>> tables, double R, bool use_quantized = false);

    std::size_t tap_count() const { return tables_.front().size(); }
    std::size_t setting_count() const { return tables_.size(); }
    std::size_t active_setting() const { return active_; }
    double bound() const { return R_; }
    bool uses_quantized() const { return quantized_; }

    /// Switch the active step response; no transition dynamics are modeled.
    void set_setting(std::size_t code);

    /// Per-tap runtime value exponents z_j; history values are floored to
    /// 2^-z_j before weighting. Empty disables requantization.
    void set_value_exponents(std::vector<int> z);

    double evaluate(TimePoint t, const InputHistory& h);

    std::uint64_t out_of_domain_count() const { return clamps_; }
    const std::vector<PwlTable>& tables(std::size_t code) const { return tables_.at(code); }

private:
    std::vector<std::vector<PwlTable>> tables_;
    double R_;
    bool quantized_;
    std::size_t active_ = 0;
    std::vector<int> value_exp_;
    std::uint64_t clamps_ = 0;
    std::vector<double> ages_, values_;
};

/// Trims and fits the n tap tables of F for TX period T and period jitter J
/// (both ns). Each table is fitted to `tol_abs`.
struct TapTables {
    std::vector<PwlTable> tables;
    std::vector<FitReport> reports;
};
TapTables build_tap_tables(const StepResponse& F, int n, double T_ns, double J_ns, double tol_abs,
                           Eigen::Index max_segments = kMaxSegments);

/// e_N = R * sum_m |F(tau_m) - F(tau_{m-1})| with tau_0 = (n-1) dt_min and the
/// tau_m the local extrema of F after tau_0, ending at the record end.
double truncation_bound(const StepResponse& F, int n, double dt_min_ns, double R);

/// Smallest n whose truncation bound meets the budget, with the tap span
/// kept inside the step-response record.
int choose_tap_count(const StepResponse& F, double dt_min_ns, double R, double budget);

/// e_T = R (2^-w_n max|b_n| + sum_{j<n} 2^(-w_j+1) max|b_j|); w_j are time
/// exponents on the ns axis.
double bound_eT(std::span<const PwlTable> tables, std::span<const int> w, double R);

/// e_X = 2^-z_1 max|F_1| + sum_{j>=2} 2^-z_j max(D_{j,j-1}, D_{j-1,j}),
/// D_ij = max F_i - min F_j over the tap domains.
double bound_eX(std::span<const PwlTable> tables, std::span<const int> z);

/// max{F_i} - min{F_j} over the two tables' domains.
double range_gap(const PwlTable& Fi, const PwlTable& Fj);

} // namespace ademu
