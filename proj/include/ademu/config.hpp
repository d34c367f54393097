#pragma once

#include "ademu/link.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace ademu {

/// Everything a command needs. Frequencies in the JSON document are in GHz
/// (cycles, not radians) and times in ns.
struct RunConfig {
    LinkBuild build;
    LinkConfig link;
    std::vector<double> sweep_shares{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9};
    std::filesystem::path output_dir = "out";
};

/// Parses and validates a config document. Unknown keys raise ConfigError
/// naming the offending path; missing keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved document (all defaults filled in).
nlohmann::json to_json(const RunConfig& c);

/// FNV-1a 64 of the resolved document's compact dump.
std::uint64_t config_hash(const RunConfig& c);
std::string config_hash_hex(const RunConfig& c);

/// Applies --seed: PRBS and TX jitter seeds derive from one value.
void apply_seed(RunConfig& c, std::uint64_t seed);

// --- commands ----------------------------------------------------------------

struct BuildResult {
    LinkSetup setup;
    std::filesystem::path tables_path, report_path;
};

/// Step responses, allocation and per-tap tables for every CTLE setting;
/// writes tables.json and budget_report.json.
BuildResult cmd_build(const RunConfig& c, std::ostream& log);

struct RunSummary {
    int ctle_setting = 0;
    int tx_setting = 0;
    double relative_error = 0.0; ///< ADE vs oracle replay (sweep only)
    double settle_ns = 0.0;
    double final_freq_ghz = 0.0;
    double std_pos = 0.0, std_neg = 0.0;
    double edges_per_ui = 0.0;
    std::uint64_t clamped_reads = 0;
};

/// Single run: writes trace.csv and summary.json. With `settings_sweep`,
/// runs all CTLE x TX settings and writes sweep.csv plus the worst-case
/// relative error.
std::vector<RunSummary> cmd_run(const RunConfig& c, bool settings_sweep, std::ostream& log);

struct CompareRow {
    int ctle_setting = 0;
    int tx_setting = 0;
    ErrorReport report;
};

/// ADE against the exact oracle on the same stimulus; writes compare.csv.
std::vector<CompareRow> cmd_compare(const RunConfig& c, bool settings_sweep, std::ostream& log);

/// (e_N share, n, bits) for the configured CTLE setting; writes budget_sweep.csv.
std::vector<SweepRow> cmd_sweep_budget(const RunConfig& c, std::ostream& log);

/// Runs `fn(i)` for i in [0, n) on up to hardware_concurrency threads.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

} // namespace ademu
