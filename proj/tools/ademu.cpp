#include "ademu/config.hpp"
#include "ademu/errors.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Event-driven analog dynamics emulator for a high-speed link"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    long ui_count = 0;
    bool sweep = false;

    const auto common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config (defaults when omitted)")->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "seed for PRBS data and clock jitter");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--ui-count", ui_count, "run length in UIs")->check(CLI::PositiveNumber);
    };
    auto* build = app.add_subcommand("build", "fit, trim and quantize the tap tables; write the budget report");
    auto* run = app.add_subcommand("run", "run the link and write a per-cycle trace");
    auto* cmp = app.add_subcommand("compare", "compare the emulator against the exact oracle");
    auto* sb = app.add_subcommand("sweep-budget", "tap count and storage versus e_N share");
    for (auto* s : {build, run, cmp, sb})
        common(s);
    for (auto* s : {run, cmp})
        s->add_flag("--settings-sweep", sweep, "all CTLE x TX settings");

    CLI11_PARSE(app, argc, argv);

    try {
        ademu::RunConfig cfg = config_path.empty() ? ademu::config_from_json(nlohmann::json::object())
                                                   : ademu::load_config(config_path);
        if (app.got_subcommand(build) || app.got_subcommand(run) || app.got_subcommand(cmp) ||
            app.got_subcommand(sb)) {
            if (!out_dir.empty())
                cfg.output_dir = out_dir;
            if (ui_count > 0)
                cfg.link.ui_count = ui_count;
            for (auto* s : {build, run, cmp, sb})
                if (app.got_subcommand(s) && s->count("--seed"))
                    ademu::apply_seed(cfg, seed);
        }
        if (app.got_subcommand(build))
            ademu::cmd_build(cfg, std::cout);
        else if (app.got_subcommand(run))
            ademu::cmd_run(cfg, sweep, std::cout);
        else if (app.got_subcommand(cmp))
            ademu::cmd_compare(cfg, sweep, std::cout);
        else
            ademu::cmd_sweep_budget(cfg, std::cout);
    } catch (const ademu::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
