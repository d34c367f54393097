#pragma once

#include <Eigen/Core>

#include <filesystem>
#include <string>
#include <vector>

namespace ademu {

/// Uniformly sampled step response F(k*dt), k = 0..M.
///
/// Times on this type are in seconds. Between samples F is linearly
/// interpolated, before t = 0 it is zero (causal), and past the record it
/// holds its last sample.
struct StepResponse {
    double dt = 0.0;
    Eigen::VectorXd samples;
    double steady_state = 0.0;
    std::string label;

    Eigen::Index size() const { return samples.size(); }
    double t_end() const { return dt * static_cast<double>(samples.size() - 1); }
    double value_at(double t) const;
    double min_value() const { return samples.minCoeff(); }
    double max_value() const { return samples.maxCoeff(); }
    double swing() const { return max_value() - min_value(); }
};

/// Builds a StepResponse and sets steady_state to the mean of the final 1%
/// of samples (at least one sample).
StepResponse make_step_response(double dt, Eigen::VectorXd samples, std::string label = {});

/// Mean of the trailing 1% of the samples.
double tail_mean(const Eigen::VectorXd& samples);

/// H(s) = G (1 + s/wz) / ((1 + s/w1)(1 + s/w2)); frequencies in rad/s.
struct RationalTf {
    double gain = 1.0;
    double zero = 0.0;
    double pole1 = 0.0;
    double pole2 = 0.0;
};

/// Analytic unit-step response of `tf` at time t (seconds), by partial fractions.
double ctle_step_value(const RationalTf& tf, double t);

/// Samples the analytic step response on [0, t_end]. Rejects repeated poles.
StepResponse ctle_step(const RationalTf& tf, double dt, double t_end);

/// Step response of channel followed by CTLE: trapezoidal convolution of the
/// channel's step-response derivative with the CTLE step response, on the
/// channel's time grid.
StepResponse cascade_step(const StepResponse& channel, const RationalTf& ctle);

struct ChannelParams {
    double loss_pole = 0.0;        ///< rad/s
    double delay = 0.0;            ///< s
    double reflection_amp = 0.0;
    double reflection_delay = 0.0; ///< s, measured from `delay`
};

/// Default link channel: 1 ns flight, 3 GHz loss pole, 10% reflection 3 ns later.
ChannelParams default_channel();

/// Single-pole lossy line with one delayed reflection.
StepResponse synth_channel_step(const ChannelParams& p, double dt, double t_end);

/// Times (seconds) after tau0 where the discrete first difference changes
/// sign, followed by t_end as the steady-state point.
std::vector<double> local_extrema(const StepResponse& F, double tau0);

/// Smallest t with |F(tau) - ss| <= tol_fraction*|ss| for every tau >= t.
double settling_time(const StepResponse& F, double tol_fraction);

/// Family of step responses indexed by setting code. All entries share dt
/// and sample count.
struct StepFamily {
    std::vector<StepResponse> entries;

    std::size_t size() const { return entries.size(); }
    const StepResponse& operator[](std::size_t code) const { return entries.at(code); }
};

/// Parameters of the link's channel x CTLE family: zero positions spread
/// linearly between zero_min and zero_max over `settings` codes.
struct CtleFamilyParams {
    double pole1 = 0.0;    ///< rad/s
    double pole2 = 0.0;    ///< rad/s
    double zero_min = 0.0; ///< rad/s
    double zero_max = 0.0; ///< rad/s
    int settings = 16;
    double gain_db = 0.0;  ///< 0 .. -15 dB in 1 dB steps
};

CtleFamilyParams default_ctle_family();

/// CTLE transfer function for setting `code` of the family.
RationalTf ctle_setting(const CtleFamilyParams& p, int code);

StepFamily make_ctle_family(const StepResponse& channel, const CtleFamilyParams& p);

/// Two-column CSV (time_seconds,value). Spacing must be uniform to 1 ppm.
StepResponse load_step_csv(const std::filesystem::path& path);
void save_step_csv(const StepResponse& F, const std::filesystem::path& path);

} // namespace ademu
