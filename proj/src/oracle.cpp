#include "ademu/oracle.hpp"

#include "ademu/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

namespace ademu {

double exact_superposition(const StepResponse& F, std::span<const InputEvent> events, double t_ns)
{
    // regrouped: y = sum_k F(t - t_k) (x_k - x_{k-1}), x_0 = 0. Once t - t_k
    // passes the record end every older F value equals the last sample and
    // the remaining increments telescope to x_k.
    const double t_end = F.t_end();
    const double f_last = F.samples[F.size() - 1];
    auto it = std::upper_bound(events.begin(), events.end(), t_ns,
                               [](double t, const InputEvent& e) { return t < e.t_ns; });
    double y = 0.0;
    while (it != events.begin()) {
        --it;
        const double age_s = (t_ns - it->t_ns) * 1e-9;
        if (age_s >= t_end)
            return y + f_last * it->x;
        const double prev = it == events.begin() ? 0.0 : std::prev(it)->x;
        y += F.value_at(age_s) * (it->x - prev);
    }
    return y;
}

double DenseTrace::value_at(double t_ns) const
{
    const double pos = (t_ns - t0_ns) / dt_ns;
    const auto last = samples.size() - 1;
    if (pos < -1e-9 || pos > static_cast<double>(last) + 1e-9)
        throw ContractViolation("dense trace: time outside the trace span");
    const double p = std::clamp(pos, 0.0, static_cast<double>(last));
    const auto i = std::min(static_cast<Eigen::Index>(p), last > 0 ? last - 1 : 0);
    if (last == 0)
        return samples[0];
    const double frac = p - static_cast<double>(i);
    return samples[i] + frac * (samples[i + 1] - samples[i]);
}

DenseTrace dense_convolve(const StepResponse& F, std::span<const InputEvent> events, double dt_ns, double t_end_ns)
{
    if (!(dt_ns > 0.0) || dt_ns * 1e-9 > F.dt * (1.0 + 1e-12))
        throw ContractViolation("dense_convolve: need 0 < dt <= F.dt");
    if (!(t_end_ns >= 0.0))
        throw ContractViolation("dense_convolve: t_end must be non-negative");
    const auto N = static_cast<Eigen::Index>(std::floor(t_end_ns / dt_ns + 1e-9)) + 1;

    // avg[j] = mean input over cell ((j-1) dt, j dt]; cell 0 is empty (t <= 0)
    Eigen::VectorXd avg = Eigen::VectorXd::Zero(N);
    {
        std::size_t e = 0;
        double level = 0.0;
        for (Eigen::Index j = 1; j < N; ++j) {
            const double a = (j - 1) * dt_ns, b = j * dt_ns;
            double acc = 0.0, cur = a;
            while (e < events.size() && events[e].t_ns <= a) {
                level = events[e].x;
                ++e;
            }
            while (e < events.size() && events[e].t_ns < b) {
                acc += level * (events[e].t_ns - cur);
                cur = events[e].t_ns;
                level = events[e].x;
                ++e;
            }
            acc += level * (b - cur);
            avg[j] = acc / dt_ns;
        }
    }

    // increments of F per cell; F is held after its record so the kernel ends there
    const auto K = std::min<Eigen::Index>(N, static_cast<Eigen::Index>(std::ceil(F.t_end() * 1e9 / dt_ns)) + 1);
    Eigen::VectorXd f(K);
    double prev = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
        const double v = F.value_at(k * dt_ns * 1e-9);
        f[k] = v - prev;
        prev = v;
    }
    // y[i] = f[0] u(t_i) + sum_{k>=1} f[k] avg[i-k+1]; f vanishes past the kernel
    Eigen::VectorXd y = Eigen::VectorXd::Zero(N);
    std::size_t e = 0;
    double level = 0.0;
    for (Eigen::Index i = 0; i < N; ++i) {
        while (e < events.size() && events[e].t_ns <= i * dt_ns) {
            level = events[e].x;
            ++e;
        }
        double acc = f[0] * level;
        const Eigen::Index kmax = std::min(K - 1, i);
        if (kmax >= 1)
            acc += f.segment(1, kmax).dot(avg.segment(i - kmax + 1, kmax).reverse());
        y[i] = acc;
    }
    return {0.0, dt_ns, std::move(y)};
}

ErrorReport compare(std::span<const double> a, std::span<const double> b)
{
    if (a.empty() || a.size() != b.size())
        throw ContractViolation("compare: need two non-empty series of equal length");
    ErrorReport r;
    double ref = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        r.max_abs = std::max(r.max_abs, d);
        ref = std::max(ref, std::abs(b[i]));
        sq += d * d;
    }
    r.count = a.size();
    r.rms = std::sqrt(sq / static_cast<double>(a.size()));
    r.relative = ref > 0.0 ? r.max_abs / ref : (r.max_abs > 0.0 ? INFINITY : 0.0);
    return r;
}

ErrorReport compare(std::span<const double> t_ns, std::span<const double> a, const DenseTrace& b)
{
    if (t_ns.size() != a.size())
        throw ContractViolation("compare: time and value series differ in length");
    std::vector<double> ref(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        ref[i] = b.value_at(t_ns[i]);
    return compare(a, ref);
}

void save_dense_csv(const DenseTrace& d, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw Error(path.string() + ": cannot write");
    out << "time_ns,value\n";
    char buf[80];
    for (Eigen::Index i = 0; i < d.samples.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", d.t0_ns + d.dt_ns * static_cast<double>(i), d.samples[i]);
        out << buf;
    }
}

} // namespace ademu
