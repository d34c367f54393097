#pragma once

#include "ademu/step_response.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <span>

namespace ademu {

/// Input step to value x at time t_ns; the input holds x until the next event.
struct InputEvent {
    double t_ns = 0.0;
    double x = 0.0;
};

/// Untruncated superposition sum_k x_k (F(t - t_k) - F(t - t_{k+1})) over all
/// events (sorted by time), in double precision on F's linear interpolant.
double exact_superposition(const StepResponse& F, std::span<const InputEvent> events, double t_ns);

/// Uniformly sampled waveform starting at t0_ns.
struct DenseTrace {
    double t0_ns = 0.0;
    double dt_ns = 0.0;
    Eigen::VectorXd samples;

    double t_end_ns() const { return t0_ns + dt_ns * static_cast<double>(samples.size() - 1); }
    /// Linear interpolation; throws outside the span.
    double value_at(double t_ns) const;
};

/// Fixed-step convolution of the piecewise-constant input with dF on [0, t_end_ns].
/// Cell averages of the input against per-cell increments of F make the result
/// exact when F is linear inside each cell. Requires dt_ns <= F.dt.
DenseTrace dense_convolve(const StepResponse& F, std::span<const InputEvent> events, double dt_ns, double t_end_ns);

struct ErrorReport {
    double max_abs = 0.0;
    double relative = 0.0; ///< max|a - b| / max|b|
    double rms = 0.0;
    std::size_t count = 0;
};

/// Pointwise comparison of equally long series; b is the reference.
ErrorReport compare(std::span<const double> a, std::span<const double> b);

/// Samples (t_ns[i], a[i]) against b linearly interpolated at the same times.
ErrorReport compare(std::span<const double> t_ns, std::span<const double> a, const DenseTrace& b);

/// CSV with header "time_ns,value".
void save_dense_csv(const DenseTrace& d, const std::filesystem::path& path);

} // namespace ademu
