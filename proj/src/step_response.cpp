#include "ademu/step_response.hpp"

#include "ademu/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace ademu {

double StepResponse::value_at(double t) const
{
    if (t < 0.0 || samples.size() == 0)
        return 0.0;
    const double pos = t / dt;
    const auto last = samples.size() - 1;
    if (pos >= static_cast<double>(last))
        return samples[last];
    const auto i = static_cast<Eigen::Index>(pos);
    const double frac = pos - static_cast<double>(i);
    return samples[i] + frac * (samples[i + 1] - samples[i]);
}

double tail_mean(const Eigen::VectorXd& samples)
{
    const Eigen::Index n = samples.size();
    const Eigen::Index k = std::max<Eigen::Index>(1, n / 100);
    return samples.tail(k).mean();
}

StepResponse make_step_response(double dt, Eigen::VectorXd samples, std::string label)
{
    if (!(dt > 0.0))
        throw ContractViolation("step response: dt must be positive");
    if (samples.size() == 0)
        throw ContractViolation("step response: no samples");
    StepResponse F;
    F.dt = dt;
    F.steady_state = tail_mean(samples);
    F.samples = std::move(samples);
    F.label = std::move(label);
    return F;
}

// --- CTLE ------------------------------------------------------------------

namespace {

void check_tf(const RationalTf& tf)
{
    if (!(tf.pole1 > 0.0 && tf.pole2 > 0.0 && tf.zero > 0.0))
        throw ContractViolation("ctle: poles and zero must be positive");
    if (tf.pole1 == tf.pole2)
        throw ContractViolation("ctle: repeated pole not supported (perturb one pole by 1 ppm)");
}

} // namespace

double ctle_step_value(const RationalTf& tf, double t)
{
    if (t <= 0.0) // causal, and H(inf) = 0 so the response starts at zero
        return 0.0;
    const double w1 = tf.pole1, w2 = tf.pole2, wz = tf.zero;
    // residues of H(s)/s at -w1 and -w2, normalized by G
    const double a1 = -w2 * (1.0 - w1 / wz) / (w2 - w1);
    const double a2 = w1 * (1.0 - w2 / wz) / (w2 - w1);
    return tf.gain * (1.0 + a1 * std::exp(-w1 * t) + a2 * std::exp(-w2 * t));
}

StepResponse ctle_step(const RationalTf& tf, double dt, double t_end)
{
    check_tf(tf);
    if (!(dt > 0.0) || !(t_end > 0.0))
        throw ContractViolation("ctle: dt and t_end must be positive");
    const auto n = static_cast<Eigen::Index>(std::llround(t_end / dt)) + 1;
    Eigen::VectorXd s(n);
    for (Eigen::Index k = 0; k < n; ++k)
        s[k] = ctle_step_value(tf, dt * static_cast<double>(k));
    StepResponse F = make_step_response(dt, std::move(s), "ctle");
    F.steady_state = tf.gain;
    return F;
}

StepResponse cascade_step(const StepResponse& channel, const RationalTf& ctle)
{
    check_tf(ctle);
    if (channel.samples.size() == 0)
        throw ContractViolation("cascade: empty channel step response");

    const Eigen::Index n = channel.size();
    Eigen::VectorXd fc(n);
    for (Eigen::Index k = 0; k < n; ++k)
        fc[k] = ctle_step_value(ctle, channel.dt * static_cast<double>(k));

    // y[k] = F_ch[0] Fc[k] + sum_m dF_ch[m] * (Fc[k-m] + Fc[k-m-1]) / 2
    const Eigen::VectorXd dch = channel.samples.tail(n - 1) - channel.samples.head(n - 1);
    Eigen::VectorXd fc_mid(n);
    fc_mid[0] = 0.5 * fc[0];
    fc_mid.tail(n - 1) = 0.5 * (fc.tail(n - 1) + fc.head(n - 1));

    Eigen::VectorXd y = channel.samples[0] * fc;
    for (Eigen::Index m = 0; m + 1 < n; ++m) {
        const double d = dch[m];
        if (d == 0.0)
            continue;
        // contributes to k >= m+1 with kernel index k-m-1 into fc_mid shifted by one
        const Eigen::Index len = n - m - 1;
        y.tail(len).noalias() += d * fc_mid.head(len + 1).tail(len);
    }
    StepResponse out = make_step_response(channel.dt, std::move(y), channel.label + "*ctle");
    return out;
}

// --- channel ---------------------------------------------------------------

ChannelParams default_channel()
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return {two_pi * 3e9, 1e-9, 0.1, 3e-9};
}

StepResponse synth_channel_step(const ChannelParams& p, double dt, double t_end)
{
    if (!(p.loss_pole > 0.0))
        throw ContractViolation("channel: loss pole must be positive");
    if (!(p.reflection_amp >= 0.0 && p.reflection_amp < 1.0))
        throw ContractViolation("channel: reflection amplitude must be in [0, 1)");
    if (p.delay < 0.0 || p.reflection_delay < 0.0)
        throw ContractViolation("channel: delays must be non-negative");
    if (!(dt > 0.0) || !(t_end > 0.0))
        throw ContractViolation("channel: dt and t_end must be positive");

    const auto n = static_cast<Eigen::Index>(std::llround(t_end / dt)) + 1;
    const auto edge = [&](double t) { return t > 0.0 ? 1.0 - std::exp(-p.loss_pole * t) : 0.0; };
    Eigen::VectorXd s(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double t = dt * static_cast<double>(k);
        s[k] = edge(t - p.delay) + p.reflection_amp * edge(t - p.delay - p.reflection_delay);
    }
    StepResponse F = make_step_response(dt, std::move(s), "channel");
    F.steady_state = 1.0 + p.reflection_amp;
    return F;
}

// --- features --------------------------------------------------------------

std::vector<double> local_extrema(const StepResponse& F, double tau0)
{
    std::vector<double> out;
    const Eigen::Index n = F.size();
    const double t_end = F.t_end();
    if (tau0 < t_end) {
        auto i0 = static_cast<Eigen::Index>(std::ceil(tau0 / F.dt));
        int last_sign = 0;
        // start one difference early so a turn exactly at sample i0 is seen
        for (Eigen::Index i = std::max<Eigen::Index>(i0 - 1, 0); i + 1 < n; ++i) {
            const double d = F.samples[i + 1] - F.samples[i];
            const int sign = (d > 0.0) - (d < 0.0);
            if (sign == 0)
                continue;
            if (last_sign != 0 && sign != last_sign)
                out.push_back(F.dt * static_cast<double>(i));
            last_sign = sign;
        }
    }
    if (out.empty() || out.back() < t_end)
        out.push_back(t_end);
    return out;
}

double settling_time(const StepResponse& F, double tol_fraction)
{
    if (!(tol_fraction > 0.0 && tol_fraction < 1.0))
        throw ContractViolation("settling_time: tolerance must be in (0, 1)");
    const double band = tol_fraction * std::abs(F.steady_state);
    const Eigen::Index n = F.size();
    Eigen::Index last_bad = -1;
    for (Eigen::Index i = n - 1; i >= 0; --i) {
        if (std::abs(F.samples[i] - F.steady_state) > band) {
            last_bad = i;
            break;
        }
    }
    if (last_bad < 0)
        return 0.0;
    if (last_bad == n - 1)
        throw Error("settling_time: step response does not settle within the record");
    return F.dt * static_cast<double>(last_bad + 1);
}

// --- family ----------------------------------------------------------------

CtleFamilyParams default_ctle_family()
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return {two_pi * 2e9, two_pi * 8e9, two_pi * 0.4e9, two_pi * 2.0e9, 16, 0.0};
}

RationalTf ctle_setting(const CtleFamilyParams& p, int code)
{
    if (code < 0 || code >= p.settings)
        throw ContractViolation("ctle setting " + std::to_string(code) + " out of range");
    const double step = p.settings > 1 ? (p.zero_max - p.zero_min) / (p.settings - 1) : 0.0;
    return {std::pow(10.0, p.gain_db / 20.0), p.zero_min + step * code, p.pole1, p.pole2};
}

StepFamily make_ctle_family(const StepResponse& channel, const CtleFamilyParams& p)
{
    StepFamily fam;
    fam.entries.reserve(static_cast<std::size_t>(p.settings));
    for (int code = 0; code < p.settings; ++code) {
        StepResponse F = cascade_step(channel, ctle_setting(p, code));
        F.label = "ctle" + std::to_string(code);
        fam.entries.push_back(std::move(F));
    }
    return fam;
}

// --- CSV -------------------------------------------------------------------

namespace {

bool parse_double(std::string_view s, double& out)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    if (s.empty())
        return false;
    if (s.front() == '+')
        s.remove_prefix(1);
    const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

} // namespace

StepResponse load_step_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ParseError(path.string() + ": cannot open");

    std::vector<double> times, values;
    std::string line;
    std::size_t row = 0;
    bool seen_data = false;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r" || line[0] == '#')
            continue;
        const auto comma = line.find(',');
        double t = 0.0, v = 0.0;
        const bool ok = comma != std::string::npos &&
                        parse_double(std::string_view(line).substr(0, comma), t) &&
                        parse_double(std::string_view(line).substr(comma + 1), v);
        if (!ok) {
            if (!seen_data && line.find("time") != std::string::npos)
                continue; // header
            throw ParseError(path.string() + ": row " + std::to_string(row) + ": unparsable '" + line + "'");
        }
        seen_data = true;
        if (!times.empty()) {
            const double step = t - times.back();
            if (!(step > 0.0))
                throw ParseError(path.string() + ": row " + std::to_string(row) + ": time not increasing");
            if (times.size() >= 2) {
                const double dt0 = times[1] - times[0];
                if (std::abs(step - dt0) > 1e-6 * dt0)
                    throw ParseError(path.string() + ": row " + std::to_string(row) + ": nonuniform spacing");
            }
        } else if (t != 0.0) {
            throw ParseError(path.string() + ": row " + std::to_string(row) + ": first sample must be at t = 0");
        }
        times.push_back(t);
        values.push_back(v);
    }
    if (times.size() < 2)
        throw ParseError(path.string() + ": need at least two samples");
    Eigen::VectorXd s = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
    return make_step_response(times[1] - times[0], std::move(s), path.stem().string());
}

void save_step_csv(const StepResponse& F, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error(path.string() + ": cannot write");
    out << "time_seconds,value\n";
    char buf[64];
    for (Eigen::Index k = 0; k < F.size(); ++k) {
        std::snprintf(buf, sizeof buf, "%.17g,", F.dt * static_cast<double>(k));
        out << buf;
        std::snprintf(buf, sizeof buf, "%.17g\n", F.samples[k]);
        out << buf;
    }
}

} // namespace ademu
