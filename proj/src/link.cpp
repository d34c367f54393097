#include "ademu/link.hpp"

#include "ademu/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>

namespace ademu {

// --- TX ----------------------------------------------------------------------

namespace {

std::vector<int> prbs_taps(int order)
{
    switch (order) {
    case 7: return {7, 6};
    case 15: return {15, 14};
    case 31: return {31, 28};
    default: throw ConfigError("prbs: order must be 7, 15 or 31");
    }
}

std::uint64_t prbs_seed(int order, std::uint64_t seed)
{
    const std::uint64_t s = seed & ((std::uint64_t{1} << order) - 1);
    if (s == 0)
        throw ConfigError("prbs: seed is zero within the register width");
    return s;
}

} // namespace

Prbs::Prbs(int order, std::uint64_t seed) : lfsr_(order, prbs_taps(order), prbs_seed(order, seed)) {}

std::pair<double, double> tx_ffe_taps(int setting)
{
    if (setting < 0 || setting >= kTxSettings)
        throw ConfigError("tx setting " + std::to_string(setting) + " out of range");
    const double c1 = 0.5 * (1.0 - std::pow(10.0, -setting / 20.0));
    return {1.0 - c1, c1};
}

double tx_level(int bit, int prev_bit, int setting)
{
    const auto [c0, c1] = tx_ffe_taps(setting);
    const double s = bit ? 1.0 : -1.0;
    const double sp = prev_bit ? 1.0 : -1.0;
    return c0 * s - c1 * sp;
}

// --- DCO ---------------------------------------------------------------------

DcoParams default_dco()
{
    DcoParams p;
    p.beta_ghz = 0.4 / 7192.0;
    p.alpha_ghz = 7.6 - 1000.0 * p.beta_ghz;
    return p;
}

DcoTable::DcoTable(const DcoParams& p, double tol_rel) : p_(p)
{
    if (p.code_max <= p.code_min)
        throw ConfigError("dco: empty code range");
    if (!(p.alpha_ghz + p.beta_ghz * p.code_min > 0.0 && p.alpha_ghz + p.beta_ghz * p.code_max > 0.0))
        throw ConfigError("dco: alpha + beta*code must stay positive over the code range");
    SampledCurve c;
    c.x0 = p.code_min;
    c.dx = 1.0;
    c.y.resize(p.code_max - p.code_min + 1);
    for (int k = p.code_min; k <= p.code_max; ++k)
        c.y[k - p.code_min] = 1.0 / (p.alpha_ghz + p.beta_ghz * k);
    const double tol = tol_rel * c.y.minCoeff();
    table_ = fit_pwl(c, {static_cast<double>(p.code_min), static_cast<double>(p.code_max)}, tol).table;
}

double DcoTable::period_ns(int code) const
{
    return eval_pwl(table_, static_cast<double>(clamp(code)));
}

// --- RX blocks ---------------------------------------------------------------

PhaseDecision bbpd(int prev_data, int edge, int data)
{
    if (prev_data == data)
        return PhaseDecision::hold;
    return edge == data ? PhaseDecision::early : PhaseDecision::late;
}

double dfe_apply(double raw, std::span<const int> decisions, std::span<const double> taps)
{
    if (decisions.size() < taps.size())
        throw ContractViolation("dfe: decision history shorter than the tap list");
    double y = raw;
    for (std::size_t k = 0; k < taps.size(); ++k)
        y -= taps[k] * (decisions[k] ? 1.0 : -1.0);
    return y;
}

int cdr_update(int code, PhaseDecision pd, int gain, int code_min, int code_max)
{
    const int step = pd == PhaseDecision::early ? gain : pd == PhaseDecision::late ? -gain : 0;
    return std::clamp(code + step, code_min, code_max);
}

std::vector<double> postcursor_taps(const StepResponse& F, double cursor_ns, double T_ns, int count)
{
    std::vector<double> taps;
    for (int k = 1; k <= count; ++k) {
        const double t = (cursor_ns + k * T_ns) * 1e-9;
        taps.push_back(F.value_at(t) - F.value_at(t - T_ns * 1e-9));
    }
    return taps;
}

// --- setup -------------------------------------------------------------------

namespace {

StepResponse resample(const StepResponse& F, double dt, double t_end)
{
    const auto n = static_cast<Eigen::Index>(std::llround(t_end / dt)) + 1;
    Eigen::VectorXd s(n);
    for (Eigen::Index k = 0; k < n; ++k)
        s[k] = F.value_at(dt * static_cast<double>(k));
    return make_step_response(dt, std::move(s), F.label);
}

} // namespace

LinkSetup build_link_setup(const LinkBuild& b)
{
    if (!(b.ui_ns > 0.0) || b.dt_per_ui < 1)
        throw ConfigError("link build: ui_ns and dt_per_ui must be positive");
    if (!(b.tx_jitter_ns >= 0.0 && 2.0 * b.tx_jitter_ns < b.ui_ns))
        throw ConfigError("link build: need 0 <= tx_jitter < ui/2");
    LinkSetup s;
    s.build = b;
    const double dt = b.ui_ns / b.dt_per_ui * 1e-9;
    const double t_end = b.record_ns * 1e-9;
    if (b.channel_csv)
        s.channel = resample(load_step_csv(*b.channel_csv), dt, t_end);
    else
        s.channel = synth_channel_step(b.channel, dt, t_end);
    s.family = make_ctle_family(s.channel, b.ctle);

    const TapGeometry geo{b.ui_ns, b.tx_jitter_ns};
    int n = b.tap_count;
    if (n <= 0) {
        for (const auto& F : s.family.entries) {
            const double swing = b.R * F.samples.cwiseAbs().maxCoeff();
            n = std::max(n, choose_tap_count(F, geo.dt_min_ns(), b.R, b.budget.total * b.budget.eN_share * swing));
        }
    }
    for (const auto& F : s.family.entries) {
        Allocation a = allocate(F, b.budget, geo, b.R, b.fit, n);
        s.value_exp.push_back(a.report.z);
        s.tables.push_back(std::move(a.tables));
        s.reports.push_back(std::move(a.report));
    }
    return s;
}

// --- run ---------------------------------------------------------------------

Trace run_link(const LinkSetup& setup, const LinkConfig& cfg)
{
    if (cfg.ui_count <= 0)
        throw ConfigError("link: ui_count must be positive");
    if (std::abs(cfg.ui_ns - setup.build.ui_ns) > 1e-12)
        throw ConfigError("link: ui_ns differs from the one the tables were built for");
    if (cfg.tx_jitter_ns > setup.build.tx_jitter_ns + 1e-15)
        throw ConfigError("link: tx jitter exceeds the jitter the tables were trimmed for");
    if (cfg.ctle_setting < 0 || static_cast<std::size_t>(cfg.ctle_setting) >= setup.tables.size())
        throw ConfigError("link: ctle setting out of range");
    tx_ffe_taps(cfg.tx_setting); // validates

    const double R = setup.build.R;
    const TimePoint T = TimePoint::from_ns(cfg.ui_ns);
    const TimePoint J = TimePoint::from_ns(cfg.tx_jitter_ns);
    const auto setting = static_cast<std::size_t>(cfg.ctle_setting);
    const StepResponse& F = setup.family[setting];

    std::optional<Ade> ade;
    const auto& z = setup.value_exp[setting];
    const int x_exp = z.empty() ? 30 : *std::max_element(z.begin(), z.end());
    if (cfg.backend == Backend::ade) {
        ade.emplace(setup.tables, R, cfg.quantized);
        ade->set_setting(setting);
        ade->set_value_exponents(z);
    }
    InputHistory hist(setup.tables[setting].size(), T - J, T + J, R);

    const DcoTable dco(cfg.dco);
    int code = dco.clamp(cfg.dco_code_init);

    TimeManager tm;
    const std::size_t tx = tm.add_clock(
        EmulatedClock("tx", T, 1, J, Lfsr(31, {31, 28}, cfg.tx_jitter_seed), TimePoint::zero()));
    EmulatedClock rx_clock("rx", dco.period(code), 2, TimePoint::from_ns(cfg.rx_jitter_ns),
                           Lfsr(31, {31, 28}, cfg.rx_jitter_seed), TimePoint::from_ns(cfg.rx_first_edge_ns));
    if (cfg.rx_jitter_every_phase)
        rx_clock.set_jitter_placement(JitterPlacement::every_phase);
    const std::size_t rx = tm.add_clock(std::move(rx_clock));

    Prbs prbs(cfg.prbs_order, cfg.prbs_seed);
    const TimePoint prop = TimePoint::from_ns(cfg.cdr_prop_ns);

    Trace tr;
    const auto rows = static_cast<std::size_t>(cfg.ui_count) * 3 + 8;
    if (cfg.record_trace) {
        tr.time_ns.reserve(rows);
        tr.channel_in.reserve(rows);
        tr.ade_out.reserve(rows);
        tr.sample.reserve(rows);
        tr.decision.reserve(rows);
        tr.dco_code.reserve(rows);
        tr.edges.reserve(rows);
    }

    std::vector<int> decisions(cfg.dfe_taps.size(), 0);
    int prev_bit = 0;
    int prev_data = -1;
    int edge_bit = -1;
    double level = 0.0;
    const double t_stop = static_cast<double>(cfg.ui_count) * cfg.ui_ns;

    for (;;) {
        const Cycle& cy = tm.advance();
        const double t_ns = cy.t.to_ns();
        if (t_ns >= t_stop)
            break;

        bool data_edge = false, edge_edge = false;
        for (const EdgeEvent& e : cy.edges) {
            if (e.clock == tx) {
                const int bit = prbs.next();
                level = tx_level(bit, prev_bit, cfg.tx_setting);
                prev_bit = bit;
                hist.push(cy.t, quantize_round(level, x_exp));
                tr.tx_events.push_back({t_ns, level});
                tr.tx_bits.push_back(bit);
            } else if (e.clock == rx) {
                (e.phase == 0 ? data_edge : edge_edge) = true;
            }
        }

        double y = 0.0;
        if (!hist.empty())
            y = ade ? ade->evaluate(cy.t, hist) : exact_superposition(F, tr.tx_events, t_ns);

        double sample = std::numeric_limits<double>::quiet_NaN();
        int decision = -1;
        if (edge_edge)
            edge_bit = y > 0.0 ? 1 : 0;
        if (data_edge) {
            sample = dfe_apply(y, decisions, cfg.dfe_taps);
            decision = sample > 0.0 ? 1 : 0;
            if (prev_data >= 0 && edge_bit >= 0 && cfg.cdr_enabled) {
                const PhaseDecision pd = bbpd(prev_data, edge_bit, decision);
                code = cdr_update(code, pd, cfg.cdr_gain, cfg.dco.code_min, cfg.dco.code_max);
                auto& clk = tm.clock(rx);
                clk.set_period(dco.period(code));
                if (pd == PhaseDecision::early)
                    clk.nudge(-prop);
                else if (pd == PhaseDecision::late)
                    clk.nudge(prop);
            }
            prev_data = decision;
            if (!decisions.empty()) {
                std::rotate(decisions.rbegin(), decisions.rbegin() + 1, decisions.rend());
                decisions[0] = decision;
            }
            tr.rx_bits.push_back(decision);
            tr.rx_data_time_ns.push_back(t_ns);
            tr.rx_data_code.push_back(code);
        }

        if (cfg.record_trace) {
            tr.time_ns.push_back(t_ns);
            tr.channel_in.push_back(level);
            tr.ade_out.push_back(y);
            tr.sample.push_back(sample);
            tr.decision.push_back(decision);
            tr.dco_code.push_back(code);
            tr.edges.push_back(static_cast<int>(cy.edges.size()));
        }
    }
    if (ade)
        tr.clamped_reads = ade->out_of_domain_count();
    return tr;
}

// --- analysis ----------------------------------------------------------------

std::vector<double> oracle_replay(const Trace& t, const StepResponse& F)
{
    std::vector<double> out(t.size());
    for (std::size_t i = 0; i < t.size(); ++i)
        out[i] = exact_superposition(F, t.tx_events, t.time_ns[i]);
    return out;
}

double measure_relative_error(std::span<const double> emu, std::span<const double> ref)
{
    return compare(emu, ref).relative;
}

Histogram amplitude_histogram(std::span<const double> values, int bins)
{
    if (values.empty())
        throw ContractViolation("histogram: no samples");
    if (bins < 1)
        throw ContractViolation("histogram: need at least one bin");
    Histogram h;
    const auto [mn, mx] = std::minmax_element(values.begin(), values.end());
    double lo = *mn, hi = *mx;
    if (hi == lo) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double w = (hi - lo) / bins;
    h.edges.resize(static_cast<std::size_t>(bins) + 1);
    for (int i = 0; i <= bins; ++i)
        h.edges[i] = lo + w * i;
    h.counts.assign(static_cast<std::size_t>(bins), 0);

    double sp = 0.0, sn = 0.0, qp = 0.0, qn = 0.0;
    for (double v : values) {
        const int b = std::clamp(static_cast<int>((v - lo) / w), 0, bins - 1);
        ++h.counts[b];
        if (v > 0.0) {
            ++h.n_pos;
            sp += v;
            qp += v * v;
        } else {
            ++h.n_neg;
            sn += v;
            qn += v * v;
        }
    }
    const auto stats = [](double s, double q, std::size_t n, double& mean, double& sd) {
        if (n == 0)
            return;
        mean = s / static_cast<double>(n);
        sd = std::sqrt(std::max(0.0, q / static_cast<double>(n) - mean * mean));
    };
    stats(sp, qp, h.n_pos, h.mean_pos, h.std_pos);
    stats(sn, qn, h.n_neg, h.mean_neg, h.std_neg);
    return h;
}

std::vector<double> data_samples(const Trace& t, double from_ns)
{
    std::vector<double> out;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t.decision[i] >= 0 && t.time_ns[i] >= from_ns)
            out.push_back(t.sample[i]);
    return out;
}

CdrSummary cdr_summary(const Trace& t, const LinkConfig& cfg)
{
    CdrSummary s;
    const std::size_t n = t.rx_data_code.size();
    if (n < 8)
        return s;
    const std::size_t h0 = n / 2;
    const auto tail = std::span(t.rx_data_code).subspan(h0);
    const auto [mn, mx] = std::minmax_element(tail.begin(), tail.end());
    s.dither_min = *mn;
    s.dither_max = *mx;
    s.final_code = std::accumulate(tail.begin(), tail.end(), 0.0) / static_cast<double>(tail.size());
    s.final_freq_ghz = cfg.dco.alpha_ghz + cfg.dco.beta_ghz * s.final_code;
    const double centre = std::round(s.final_code);
    s.dither_dev = std::max(centre - s.dither_min, s.dither_max - centre);
    s.dither_dev_raw = std::max(s.final_code - s.dither_min, s.dither_max - s.final_code);
    const double band = 0.1 * std::abs(s.final_code - cfg.dco_code_init);
    for (std::size_t i = 0; i < n; ++i) {
        if (std::abs(t.rx_data_code[i] - s.final_code) <= band) {
            s.settle_ns = t.rx_data_time_ns[i];
            s.settled = true;
            break;
        }
    }
    return s;
}

double edges_per_ui(const Trace& t, double t0_ns, double t1_ns, double ui_ns)
{
    std::int64_t edges = 0;
    for (std::size_t i = 0; i < t.size(); ++i)
        if (t.time_ns[i] >= t0_ns && t.time_ns[i] < t1_ns)
            edges += t.edges[i];
    return static_cast<double>(edges) * ui_ns / (t1_ns - t0_ns);
}

void save_trace_csv(const Trace& t, const std::filesystem::path& path, const std::string& header_comment)
{
    std::ofstream out(path);
    if (!out)
        throw Error(path.string() + ": cannot write");
    if (!header_comment.empty())
        out << "# " << header_comment << '\n';
    out << "time_ns,channel_in,ade_out,sample,decision,dco_code\n";
    char buf[160];
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (std::isnan(t.sample[i]))
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,,%d,%d\n", t.time_ns[i], t.channel_in[i],
                          t.ade_out[i], t.decision[i], t.dco_code[i]);
        else
            std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%d,%d\n", t.time_ns[i], t.channel_in[i],
                          t.ade_out[i], t.sample[i], t.decision[i], t.dco_code[i]);
        out << buf;
    }
}

} // namespace ademu
