#include "ademu/config.hpp"
#include "ademu/errors.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace ademu;
using nlohmann::json;

namespace {

std::filesystem::path scratch_dir(const char* name)
{
    const auto p = std::filesystem::temp_directory_path() / (std::string("ademu_cfg_") + name);
    std::filesystem::remove_all(p);
    return p;
}

std::string first_line(const std::filesystem::path& p)
{
    std::ifstream in(p);
    std::string l;
    std::getline(in, l);
    return l;
}

} // namespace

TEST_SUITE("config") {

TEST_CASE("an empty document yields the defaults")
{
    const RunConfig c = config_from_json(json::object());
    CHECK(c.link.ctle_setting == LinkConfig{}.ctle_setting);
    CHECK(c.build.tap_count == 85);
    CHECK(c.build.budget.total == 1e-3);
    CHECK(c.output_dir == "out");
}

TEST_CASE("the resolved document round-trips with the same hash")
{
    json j = json::parse(R"({"link": {"ctle_setting": 3, "tx_setting": 2, "dfe_taps": [0.1, 0.02]},
                             "ctle": {"zero_min_ghz": 0.5}, "seeds": {"prbs": 99}})");
    const RunConfig a = config_from_json(j);
    CHECK(a.link.ctle_setting == 3);
    CHECK(a.link.dfe_taps.size() == 2);
    CHECK(a.build.ctle.zero_min == doctest::Approx(2 * M_PI * 0.5e9));
    const RunConfig b = config_from_json(to_json(a));
    CHECK(config_hash(a) == config_hash(b));
    CHECK(config_hash_hex(a).size() == 16);
    CHECK(config_hash(a) != config_hash(config_from_json(json::object())));
}

TEST_CASE("unknown keys are rejected with their path")
{
    for (const char* doc : {R"({"bogus": 1})", R"({"link": {"ctle": 1}})", R"({"budget": {"eN": 0.5}})",
                            R"({"channel": {"loss_pole": 3}})", R"({"seeds": {"jitter": 1}})"}) {
        CAPTURE(doc);
        CHECK_THROWS_AS(config_from_json(json::parse(doc)), ConfigError);
    }
    try {
        config_from_json(json::parse(R"({"link": {"ctle": 1}})"));
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("$.link.ctle") != std::string::npos);
    }
}

TEST_CASE("wrong types and out-of-range values are rejected")
{
    for (const char* doc :
         {R"({"link": {"ctle_setting": "nine"}})", R"({"link": {"ctle_setting": 16}})", R"({"link": {"tx_setting": 10}})",
          R"({"link": {"ui_count": 0}})", R"({"budget": {"eN_share": 1.0}})", R"({"budget": {"total": 0}})",
          R"({"link": {"backend": "spice"}})", R"({"link": {"prbs_order": 9}})", R"({"link": 5})",
          R"({"build": {"tx_jitter_ns": 0.07}})", R"({"sweep": {"shares": [0.5, 1.2]}})",
          R"({"link": {"dco_code_init": 20000}})", R"({"link": {"rx_jitter_ns": 0.04, "rx_jitter_every_phase": true}})",
          R"({"link": {"rx_jitter_ns": -0.001}})"}) {
        CAPTURE(doc);
        CHECK_THROWS_AS(config_from_json(json::parse(doc)), ConfigError);
    }
}

TEST_CASE("malformed and missing files")
{
    const auto dir = scratch_dir("files");
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "bad.json") << "{ \"link\": ";
    CHECK_THROWS_AS(load_config(dir / "bad.json"), ParseError);
    CHECK_THROWS_AS(load_config(dir / "absent.json"), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("one seed drives both generators and changes the hash")
{
    RunConfig c = config_from_json(json::object());
    const auto h0 = config_hash(c);
    apply_seed(c, 42);
    const auto s1 = c.link.prbs_seed, j1 = c.link.tx_jitter_seed;
    CHECK(s1 != 0);
    CHECK(j1 != 0);
    CHECK(config_hash(c) != h0);
    RunConfig d = config_from_json(json::object());
    apply_seed(d, 42);
    CHECK(d.link.prbs_seed == s1);
    CHECK(d.link.tx_jitter_seed == j1);
    apply_seed(d, 43);
    CHECK(d.link.prbs_seed != s1);
}

TEST_CASE("build and compare commands write hashed outputs")
{
    RunConfig c = config_from_json(json::parse(R"({"link": {"ui_count": 256}})"));
    c.output_dir = scratch_dir("cmd");
    std::ostringstream log;
    const BuildResult b = cmd_build(c, log);
    CHECK(std::filesystem::exists(b.tables_path));
    CHECK(std::filesystem::exists(b.report_path));
    std::ifstream in(b.tables_path);
    const json tables = json::parse(in);
    CHECK(tables.at("config_hash") == config_hash_hex(c));
    CHECK(tables.at("settings").size() == 16);
    CHECK(tables.at("settings")[0].at("taps").size() == 85);

    const auto rows = cmd_compare(c, false, log);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].report.relative < 0.015);
    CHECK(first_line(c.output_dir / "compare.csv") == "# config_hash=" + config_hash_hex(c));

    const auto runs = cmd_run(c, false, log);
    REQUIRE(runs.size() == 1);
    CHECK(runs[0].relative_error > 0.0);
    CHECK(runs[0].relative_error < 0.015);
    CHECK(std::filesystem::exists(c.output_dir / "trace.csv"));
    CHECK(std::filesystem::exists(c.output_dir / "summary.json"));
    CHECK(log.str().find("worst relative error") != std::string::npos);
    std::filesystem::remove_all(c.output_dir);
}

TEST_CASE("a channel CSV replaces the synthetic channel")
{
    const auto dir = scratch_dir("csv");
    std::filesystem::create_directories(dir);
    const StepResponse ch = synth_channel_step(default_channel(), 1e-12, 8e-9);
    save_step_csv(ch, dir / "ch.csv");
    RunConfig c = config_from_json(json{{"channel", {{"csv", (dir / "ch.csv").string()}}}});
    REQUIRE(c.build.channel_csv.has_value());
    const LinkSetup from_csv = build_link_setup(c.build);
    const LinkSetup synth = build_link_setup(config_from_json(json::object()).build);
    const auto& a = from_csv.family[9].samples;
    const auto& b = synth.family[9].samples;
    REQUIRE(a.size() == b.size());
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-3);

    std::ofstream(dir / "broken.csv") << "0,0\n1e-12,x\n";
    c.build.channel_csv = dir / "broken.csv";
    CHECK_THROWS_AS(build_link_setup(c.build), ParseError);
    std::filesystem::remove_all(dir);
}

}
