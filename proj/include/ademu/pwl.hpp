#pragma once

#include "ademu/step_response.hpp"

#include <Eigen/Core>
#include <json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>

namespace ademu {

using VectorXi64 = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// Closed interval on a table's input axis.
struct Domain {
    double lo = 0.0;
    double hi = 0.0;
    double width() const { return hi - lo; }
    friend bool operator==(const Domain&, const Domain&) = default;
};

/// Uniformly sampled curve y(x0 + k*dx); linear between samples, held
/// constant outside [x0, x_end].
struct SampledCurve {
    double x0 = 0.0;
    double dx = 1.0;
    Eigen::VectorXd y;

    double x_end() const { return x0 + dx * static_cast<double>(y.size() - 1); }
    double value_at(double x) const;
};

/// The time axis of step-response tables is nanoseconds, so slopes are per ns
/// and table arguments line up with TimePoint::to_ns().
SampledCurve step_curve_ns(const StepResponse& F);

/// Uniform-width piecewise-linear table: on segment i (x in
/// [t_start + i*seg_width, t_start + (i+1)*seg_width)) the value is
/// offsets[i] + slopes[i] * (x - t_start - i*seg_width).
struct PwlTable {
    double t_start = 0.0;
    double seg_width = 0.0;
    Eigen::VectorXd offsets;
    Eigen::VectorXd slopes;

    // fixed-point image; empty until quantize_table()
    VectorXi64 quantized_offsets;
    VectorXi64 quantized_slopes;
    int offset_exp = 0; ///< u
    int slope_exp = 0;  ///< v

    Eigen::Index n_segments() const { return offsets.size(); }
    bool is_quantized() const { return quantized_offsets.size() == offsets.size() && offsets.size() > 0; }
    Domain domain() const { return {t_start, t_start + seg_width * static_cast<double>(n_segments())}; }
    double max_abs_slope() const { return slopes.cwiseAbs().maxCoeff(); }
    /// Range of the (unquantized) table over its domain; segments are affine so
    /// the extremes sit at segment endpoints.
    std::pair<double, double> value_range() const;
};

struct FitReport {
    double max_abs_error = 0.0;
    Eigen::Index n_segments = 0;
    int iterations = 0;
    std::int64_t storage_bits = 0;
};

struct FitResult {
    PwlTable table;
    FitReport report;
};

/// Raised when the tolerance is not met at the segment cap; carries the best attempt.
class FitError : public std::runtime_error {
public:
    FitError(const std::string& what, FitReport best) : std::runtime_error(what), best_(best) {}
    const FitReport& best() const { return best_; }

private:
    FitReport best_;
};

/// Minimax (L-infinity optimal) affine fit to points (x_i, y_i).
/// Returns {offset at x_ref, slope, max error}.
struct LineFit {
    double offset = 0.0;
    double slope = 0.0;
    double error = 0.0;
};
LineFit minimax_line(std::span<const double> x, std::span<const double> y, double x_ref);

inline constexpr Eigen::Index kMinSegments = 2;
inline constexpr Eigen::Index kMaxSegments = Eigen::Index{1} << 14;
/// Segment count of one hardware BRAM table; reported, not enforced.
inline constexpr Eigen::Index kHardwareMinSegments = Eigen::Index{1} << 9;

/// Iterative doubling from two segments; every segment gets an independent
/// minimax line over the curve's samples inside it plus its interpolated
/// endpoints. Stops at the first count whose error is below tol_abs.
FitResult fit_pwl(const SampledCurve& curve, Domain domain, double tol_abs,
                  Eigen::Index max_segments = kMaxSegments);

/// Step-response overload; `domain_ns` is on the nanosecond axis.
FitResult fit_pwl(const StepResponse& F, Domain domain_ns, double tol_abs,
                  Eigen::Index max_segments = kMaxSegments);

/// Largest |table(x) - curve(x)| over the domain on a grid `oversample` times
/// finer than the curve's own sampling (at least 64 points per segment).
double dense_scan_error(const PwlTable& table, const SampledCurve& curve, int oversample = 100);

/// Segment index for x, clamped to the table; `clamped` reports out-of-domain.
Eigen::Index segment_index(const PwlTable& table, double x, bool* clamped = nullptr);

/// Unquantized evaluation. Outside the domain the nearest segment's line is
/// extended and `clamped` (when given) is set.
double eval_pwl(const PwlTable& table, double x, bool* clamped = nullptr);

/// Evaluation from the fixed-point coefficients c*2^-u and d*2^-v.
double eval_pwl_quantized(const PwlTable& table, double x, bool* clamped = nullptr);

/// c = round(a*2^u), d = round(b*2^v); unquantized coefficients are kept.
PwlTable quantize_table(PwlTable table, int u, int v);

/// Copy whose real coefficients are replaced by the fixed-point ones
/// (offsets, slopes or both).
PwlTable dequantized(const PwlTable& table, bool offsets, bool slopes);

/// Bits to store the quantized table: n_segments * (width(c) + width(d)).
std::int64_t storage_bits(const PwlTable& table);

/// e_A = R (2^(-u_n-1) + sum_{j<n} 2^(-u_j)).
double bound_eA(std::span<const PwlTable> tables, double R);

/// e_B = R (2^(-v_n-1) dtau_n + sum_{j<n} 2^(-v_j) dtau_j).
double bound_eB(std::span<const PwlTable> tables, double R);

/// Interval of t - t_k seen by tap k when TX periods lie in [T - J, T + J].
Domain trim_domain(int k, double T, double J);

/// Tap-k interval for Gaussian period jitter: the sums of k-1 and k periods
/// widened by 6 sigma sqrt(k-1) and 6 sigma sqrt(k), floored at 0.
Domain trim_domain_gaussian(int k, double T, double sigma);

nlohmann::json to_json(const PwlTable& table);
PwlTable pwl_from_json(const nlohmann::json& j);

} // namespace ademu
