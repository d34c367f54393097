#include "ademu/config.hpp"

#include "ademu/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>

namespace ademu {

namespace {

using nlohmann::json;

std::filesystem::path prepare_dir(const RunConfig& c)
{
    std::error_code ec;
    std::filesystem::create_directories(c.output_dir, ec);
    if (ec)
        throw Error(c.output_dir.string() + ": cannot create output directory: " + ec.message());
    return c.output_dir;
}

void write_json(const std::filesystem::path& p, const json& j)
{
    std::ofstream out(p);
    if (!out)
        throw Error(p.string() + ": cannot write");
    out << j.dump(1) << '\n';
}

std::string fmt(const char* f, double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

RunSummary summarize(const Trace& tr, const LinkConfig& cfg)
{
    RunSummary s;
    s.ctle_setting = cfg.ctle_setting;
    s.tx_setting = cfg.tx_setting;
    const CdrSummary cs = cdr_summary(tr, cfg);
    s.settle_ns = cs.settle_ns;
    s.final_freq_ghz = cs.final_freq_ghz;
    const double t_half = 0.5 * static_cast<double>(cfg.ui_count) * cfg.ui_ns;
    const auto ds = data_samples(tr, t_half);
    if (!ds.empty()) {
        const Histogram h = amplitude_histogram(ds, 64);
        s.std_pos = h.std_pos;
        s.std_neg = h.std_neg;
    }
    if (!tr.time_ns.empty())
        s.edges_per_ui = edges_per_ui(tr, t_half, tr.time_ns.back(), cfg.ui_ns);
    s.clamped_reads = tr.clamped_reads;
    return s;
}

json to_json(const RunSummary& s)
{
    return {{"ctle_setting", s.ctle_setting}, {"tx_setting", s.tx_setting},   {"relative_error", s.relative_error},
            {"settle_ns", s.settle_ns},       {"final_freq_ghz", s.final_freq_ghz}, {"std_pos", s.std_pos},
            {"std_neg", s.std_neg},           {"edges_per_ui", s.edges_per_ui}, {"clamped_reads", s.clamped_reads}};
}

std::vector<std::pair<int, int>> setting_grid(const RunConfig& c, bool sweep)
{
    std::vector<std::pair<int, int>> g;
    if (!sweep) {
        g.emplace_back(c.link.ctle_setting, c.link.tx_setting);
        return g;
    }
    for (int ctle = 0; ctle < c.build.ctle.settings; ++ctle)
        for (int tx = 0; tx < kTxSettings; ++tx)
            g.emplace_back(ctle, tx);
    return g;
}

} // namespace

BuildResult cmd_build(const RunConfig& c, std::ostream& log)
{
    const auto dir = prepare_dir(c);
    BuildResult r;
    r.setup = build_link_setup(c.build);
    const std::string hash = config_hash_hex(c);

    json settings = json::array();
    json reports = json::array();
    for (std::size_t s = 0; s < r.setup.tables.size(); ++s) {
        json taps = json::array();
        for (const auto& t : r.setup.tables[s])
            taps.push_back(to_json(t));
        settings.push_back({{"setting", s}, {"value_exp", r.setup.value_exp[s]}, {"taps", std::move(taps)}});
        json rep = to_json(r.setup.reports[s]);
        rep["setting"] = s;
        reports.push_back(std::move(rep));
    }
    r.tables_path = dir / "tables.json";
    r.report_path = dir / "budget_report.json";
    write_json(r.tables_path, {{"config_hash", hash}, {"settings", std::move(settings)}});
    write_json(r.report_path, {{"config_hash", hash}, {"reports", std::move(reports)}});

    const BudgetReport& rep = r.setup.reports.at(static_cast<std::size_t>(c.link.ctle_setting));
    log << "config " << hash << '\n'
        << "taps " << rep.n << ", settings " << r.setup.tables.size() << '\n'
        << "setting " << c.link.ctle_setting << ": realized/share"
        << " eN " << rep.realized.eN << "/" << rep.shares.eN << " eA " << rep.realized.eA << "/" << rep.shares.eA
        << " eB " << rep.realized.eB << "/" << rep.shares.eB << " eT " << rep.realized.eT << "/" << rep.shares.eT
        << " eX " << rep.realized.eX << "/" << rep.shares.eX << '\n'
        << "storage " << rep.total_bits << " bits, " << rep.total_half_tiles << " half tiles, "
        << fmt("%.1f", 100.0 * rep.single_half_tile_fraction()) << "% of taps within one half tile\n"
        << "max PWL fit error " << rep.max_fit_error << '\n'
        << "wrote " << r.tables_path.string() << ", " << r.report_path.string() << '\n';
    return r;
}

std::vector<RunSummary> cmd_run(const RunConfig& c, bool settings_sweep, std::ostream& log)
{
    const auto dir = prepare_dir(c);
    const LinkSetup setup = build_link_setup(c.build);
    const std::string hash = config_hash_hex(c);
    const auto grid = setting_grid(c, settings_sweep);

    std::vector<RunSummary> out(grid.size());
    if (!settings_sweep) {
        const Trace tr = run_link(setup, c.link);
        save_trace_csv(tr, dir / "trace.csv", "config_hash=" + hash);
        out[0] = summarize(tr, c.link);
        if (c.link.backend == Backend::ade)
            out[0].relative_error =
                measure_relative_error(tr.ade_out, oracle_replay(tr, setup.family[static_cast<std::size_t>(c.link.ctle_setting)]));
        write_json(dir / "summary.json", {{"config_hash", hash}, {"summary", to_json(out[0])}});
        log << "config " << hash << '\n'
            << "cycles " << tr.size() << ", UIs " << c.link.ui_count << '\n'
            << "cdr settle " << out[0].settle_ns << " ns, final " << fmt("%.6f", out[0].final_freq_ghz) << " GHz\n"
            << "dfe output std +" << out[0].std_pos << " / -" << out[0].std_neg << '\n'
            << "edges per UI (second half) " << out[0].edges_per_ui << '\n'
            << "relative error vs exact oracle " << fmt("%.4f%%", 100.0 * out[0].relative_error) << '\n'
            << "wrote " << (dir / "trace.csv").string() << '\n';
        return out;
    }

    parallel_for(grid.size(), [&](std::size_t i) {
        LinkConfig cfg = c.link;
        cfg.ctle_setting = grid[i].first;
        cfg.tx_setting = grid[i].second;
        const Trace tr = run_link(setup, cfg);
        out[i] = summarize(tr, cfg);
        const auto ref = oracle_replay(tr, setup.family[static_cast<std::size_t>(cfg.ctle_setting)]);
        out[i].relative_error = measure_relative_error(tr.ade_out, ref);
    });

    std::ofstream csv(dir / "sweep.csv");
    if (!csv)
        throw Error((dir / "sweep.csv").string() + ": cannot write");
    csv << "# config_hash=" << hash << '\n'
        << "ctle_setting,tx_setting,relative_error,settle_ns,final_freq_ghz,std_pos,std_neg,edges_per_ui\n";
    double worst = 0.0;
    for (const auto& s : out) {
        char buf[256];
        std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", s.ctle_setting, s.tx_setting,
                      s.relative_error, s.settle_ns, s.final_freq_ghz, s.std_pos, s.std_neg, s.edges_per_ui);
        csv << buf;
        worst = std::max(worst, s.relative_error);
        log << "ctle " << s.ctle_setting << " tx " << s.tx_setting << ": rel err " << fmt("%.4f%%", 100 * s.relative_error)
            << ", std " << fmt("%.4f", s.std_pos) << "/" << fmt("%.4f", s.std_neg) << '\n';
    }
    log << "worst-case relative error " << fmt("%.4f%%", 100.0 * worst) << " over " << out.size() << " settings\n";
    return out;
}

std::vector<CompareRow> cmd_compare(const RunConfig& c, bool settings_sweep, std::ostream& log)
{
    const auto dir = prepare_dir(c);
    const LinkSetup setup = build_link_setup(c.build);
    const std::string hash = config_hash_hex(c);
    const auto grid = setting_grid(c, settings_sweep);

    std::vector<CompareRow> rows(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        LinkConfig cfg = c.link;
        cfg.ctle_setting = grid[i].first;
        cfg.tx_setting = grid[i].second;
        const Trace tr = run_link(setup, cfg);
        const auto ref = oracle_replay(tr, setup.family[static_cast<std::size_t>(cfg.ctle_setting)]);
        rows[i] = {cfg.ctle_setting, cfg.tx_setting, compare(tr.ade_out, ref)};
    });

    std::ofstream csv(dir / "compare.csv");
    if (!csv)
        throw Error((dir / "compare.csv").string() + ": cannot write");
    csv << "# config_hash=" << hash << '\n' << "ctle_setting,tx_setting,max_abs,relative,rms,count\n";
    double worst = 0.0;
    for (const auto& r : rows) {
        char buf[200];
        std::snprintf(buf, sizeof buf, "%d,%d,%.9g,%.9g,%.9g,%zu\n", r.ctle_setting, r.tx_setting, r.report.max_abs,
                      r.report.relative, r.report.rms, r.report.count);
        csv << buf;
        worst = std::max(worst, r.report.relative);
    }
    log << "config " << hash << '\n'
        << "compared " << rows.size() << " setting(s), worst relative error " << fmt("%.4f%%", 100.0 * worst)
        << '\n'
        << "wrote " << (dir / "compare.csv").string() << '\n';
    return rows;
}

std::vector<SweepRow> cmd_sweep_budget(const RunConfig& c, std::ostream& log)
{
    const auto dir = prepare_dir(c);
    const std::string hash = config_hash_hex(c);
    LinkBuild b = c.build;
    const LinkSetup setup = build_link_setup(b);
    const StepResponse& F = setup.family[static_cast<std::size_t>(c.link.ctle_setting)];
    const auto rows = sweep_eN_share(F, b.budget.total, c.sweep_shares, {b.ui_ns, b.tx_jitter_ns}, b.R, b.fit);

    std::ofstream csv(dir / "budget_sweep.csv");
    if (!csv)
        throw Error((dir / "budget_sweep.csv").string() + ": cannot write");
    csv << "# config_hash=" << hash << '\n' << "eN_share,n,total_bits,ok\n";
    for (const auto& r : rows) {
        char buf[128];
        std::snprintf(buf, sizeof buf, "%.6g,%d,%lld,%d\n", r.share, r.n, static_cast<long long>(r.total_bits),
                      r.ok ? 1 : 0);
        csv << buf;
        log << "share " << r.share << ": n " << r.n << ", bits " << r.total_bits << (r.ok ? "" : " (failed)") << '\n';
    }
    if (const auto best = best_share(rows))
        log << "minimum storage at e_N share " << best->share << " (" << best->total_bits << " bits)\n";
    log << "wrote " << (dir / "budget_sweep.csv").string() << '\n';
    return rows;
}

} // namespace ademu
