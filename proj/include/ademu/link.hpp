#pragma once

#include "ademu/ade.hpp"
#include "ademu/error_budget.hpp"
#include "ademu/oracle.hpp"
#include "ademu/pwl.hpp"
#include "ademu/step_response.hpp"
#include "ademu/time_manager.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace ademu {

// --- data source -------------------------------------------------------------

/// PRBS-k from a maximal Fibonacci LFSR (k in {7, 15, 31}); the output bit is
/// the bit shifted in.
class Prbs {
public:
    explicit Prbs(int order = 15, std::uint64_t seed = 0x7fffffff);
    int next() { return static_cast<int>(lfsr_.next() & 1u); }
    int order() const { return lfsr_.width(); }

private:
    Lfsr lfsr_;
};

inline constexpr int kTxSettings = 10;

/// Main and post-cursor FFE weights for de-emphasis `setting` dB (0..9).
std::pair<double, double> tx_ffe_taps(int setting);

/// 2-tap FFE output level for `bit` following `prev_bit`.
double tx_level(int bit, int prev_bit, int setting);

// --- DCO ---------------------------------------------------------------------

/// f(code) = alpha + beta*code in GHz, so T = 1/f in ns.
struct DcoParams {
    double alpha_ghz = 0.0;
    double beta_ghz = 0.0;
    int code_min = 0;
    int code_max = 16383;
};

/// 1000 -> 7.6 GHz and 8192 -> 8.0 GHz.
DcoParams default_dco();

/// The nonlinear code-to-period map stored as a PWL table over the code axis.
class DcoTable {
public:
    explicit DcoTable(const DcoParams& p, double tol_rel = 1e-6);

    const DcoParams& params() const { return p_; }
    int clamp(int code) const { return std::clamp(code, p_.code_min, p_.code_max); }
    double period_ns(int code) const;
    double exact_period_ns(int code) const { return 1.0 / (p_.alpha_ghz + p_.beta_ghz * clamp(code)); }
    TimePoint period(int code, int time_exp = kDefaultTimeExp) const
    {
        return TimePoint::from_ns(period_ns(code), time_exp);
    }
    const PwlTable& table() const { return table_; }

private:
    DcoParams p_;
    PwlTable table_;
};

// --- receiver blocks ---------------------------------------------------------

enum class PhaseDecision { early, late, hold };

/// Alexander phase detector. `edge` is the sign of the sample taken between
/// the two data samples. `early` means the transition preceded the edge
/// sample, so the recovered clock must speed up.
PhaseDecision bbpd(int prev_data, int edge, int data);

/// raw - sum_k taps[k] * sign(decision_{-k-1}); `decisions` holds the newest
/// decision first.
double dfe_apply(double raw, std::span<const int> decisions, std::span<const double> taps);

/// Integral code update with saturation; returns the new code.
int cdr_update(int code, PhaseDecision pd, int gain, int code_min, int code_max);

/// Post-cursor ISI of an isolated +1 bit sampled at `cursor_ns` after its TX
/// edge: p(cursor + k T) for k = 1..count, with p(t) = F(t) - F(t - T).
std::vector<double> postcursor_taps(const StepResponse& F, double cursor_ns, double T_ns, int count);

// --- configuration -----------------------------------------------------------

enum class Backend { ade, oracle };

/// How the per-setting tables are generated.
struct LinkBuild {
    ChannelParams channel = default_channel();
    std::optional<std::filesystem::path> channel_csv;
    CtleFamilyParams ctle = default_ctle_family();
    double ui_ns = 0.125;
    double tx_jitter_ns = 0.0;
    int dt_per_ui = 64;
    double record_ns = 16.0;
    int tap_count = 85;
    ErrorBudget budget{1e-3, 0.6};
    FitOptions fit{};
    double R = 1.0;
};

/// Family of step responses plus the quantized tap tables of every setting.
struct LinkSetup {
    LinkBuild build;
    StepResponse channel;
    StepFamily family;
    std::vector<std::vector<PwlTable>> tables; ///< [setting][tap]
    std::vector<std::vector<int>> value_exp;   ///< z_j per setting
    std::vector<BudgetReport> reports;
};

LinkSetup build_link_setup(const LinkBuild& b);

struct LinkConfig {
    double ui_ns = 0.125;
    int ctle_setting = 9;
    int tx_setting = 0;
    double tx_jitter_ns = 0.0;
    std::uint64_t tx_jitter_seed = 0xace1;
    double rx_jitter_ns = 0.0;
    bool rx_jitter_every_phase = false; ///< false: one sample per RX period
    std::uint64_t rx_jitter_seed = 0xbeef;
    DcoParams dco = default_dco();
    int dco_code_init = 1000;
    bool cdr_enabled = true;
    int cdr_gain = 8;           ///< integral code step per early/late decision
    double cdr_prop_ns = 0.010; ///< one-shot phase correction per decision
    std::vector<double> dfe_taps;
    int prbs_order = 15;
    std::uint64_t prbs_seed = 0x7fff;
    double rx_first_edge_ns = 0.0625;
    long ui_count = 8192;
    Backend backend = Backend::ade;
    bool quantized = true;
    bool record_trace = true;
};

// --- run ---------------------------------------------------------------------

/// One row per emulation cycle. `sample` is the DFE output on data-phase
/// cycles and NaN otherwise; `decision` is -1 when no data sample was taken.
struct Trace {
    std::vector<double> time_ns;
    std::vector<double> channel_in;
    std::vector<double> ade_out;
    std::vector<double> sample;
    std::vector<int> decision;
    std::vector<int> dco_code;
    std::vector<int> edges; ///< granted edges in the cycle

    std::vector<InputEvent> tx_events;
    std::vector<int> tx_bits;
    std::vector<int> rx_bits;
    std::vector<double> rx_data_time_ns;
    std::vector<int> rx_data_code; ///< dco code at each data sample
    std::uint64_t clamped_reads = 0;

    std::size_t size() const { return time_ns.size(); }
};

Trace run_link(const LinkSetup& setup, const LinkConfig& cfg);

/// Oracle output at every trace time, using the trace's own TX events.
std::vector<double> oracle_replay(const Trace& t, const StepResponse& F);

/// max|emu - ref| / max|ref| over aligned samples.
double measure_relative_error(std::span<const double> emu, std::span<const double> ref);

struct Histogram {
    std::vector<double> edges;
    std::vector<std::int64_t> counts;
    double mean_pos = 0.0, mean_neg = 0.0;
    double std_pos = 0.0, std_neg = 0.0;
    std::size_t n_pos = 0, n_neg = 0;
};

/// Histogram of `values` over `bins` equal bins, with per-cluster statistics
/// after a split at zero.
Histogram amplitude_histogram(std::span<const double> values, int bins);

/// DFE outputs of data samples taken at or after `from_ns`.
std::vector<double> data_samples(const Trace& t, double from_ns = 0.0);

/// Lock statistics over the second half of the data samples.
struct CdrSummary {
    double settle_ns = 0.0;  ///< first time within 10% of the init-to-final distance
    double final_code = 0.0; ///< mean code
    double final_freq_ghz = 0.0;
    int dither_min = 0, dither_max = 0;
    double dither_dev = 0.0;     ///< max |code - round(mean)|; codes are integers
    double dither_dev_raw = 0.0; ///< max |code - mean|
    bool settled = false;
};

CdrSummary cdr_summary(const Trace& t, const LinkConfig& cfg);

/// Granted edges in [t0, t1) per UI.
double edges_per_ui(const Trace& t, double t0_ns, double t1_ns, double ui_ns);

void save_trace_csv(const Trace& t, const std::filesystem::path& path, const std::string& header_comment = {});

} // namespace ademu
