#include "fcml/config.hpp"
#include "fcml/csv.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>

using namespace fcml;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("fcml_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("empty document gives the reference defaults", "[config]") {
    const RunConfig cfg = parse_run_config("{}");
    CHECK(cfg.schema_version == kSchemaVersion);
    const Scenario ref = Scenario::table3();
    CHECK(cfg.scenario.params.levels == 6);
    CHECK(cfg.scenario.params.flying_capacitance == ref.params.flying_capacitance);
    CHECK(cfg.scenario.estimator.alpha == ref.estimator.alpha);
    CHECK(cfg.scenario.ns == 47);
    CHECK(cfg.scenario.cascade.current.kp == ref.cascade.current.kp);
    CHECK_FALSE(cfg.analysis.frequencies.has_value());
}

TEST_CASE("the shipped Table III config parses", "[config]") {
    const RunConfig cfg = load_run_config(fs::path(FCML_SOURCE_DIR) / "configs" / "table3.json");
    REQUIRE(cfg.scenario.events.size() == 1);
    CHECK(cfg.scenario.events[0].time == 0.145);
    CHECK(cfg.scenario.events[0].action == "set_ff_enabled");
    CHECK(cfg.scenario.cascade.il_max == 20.0);
}

TEST_CASE("config round trip", "[config][property]") {
    RunConfig cfg = parse_run_config("{}", {"estimator.alpha=0.1", "scenario.duration=0.05",
                                            "converter.flying_capacitance=[1e-6,2e-6,3e-6,4e-6]",
                                            "analysis.frequencies=[]", "cascade.psi=abs_sin"});
    CHECK(cfg.scenario.estimator.alpha == 0.1);
    CHECK(cfg.scenario.params.flying_capacitance[2] == 3e-6);
    REQUIRE(cfg.analysis.frequencies.has_value());
    CHECK(cfg.analysis.frequencies->empty());
    CHECK(cfg.scenario.cascade.psi == PsiShape::AbsSin);
    const std::string text = run_config_to_json(cfg);
    const RunConfig back = parse_run_config(text);
    CHECK(run_config_to_json(back) == text);
    CHECK(back.scenario.duration == 0.05);
}

TEST_CASE("config rejects bad input", "[config]") {
    CHECK_THROWS_AS(parse_run_config("{not json"), ValidationError);
    CHECK_THROWS_AS(parse_run_config(R"({"converter": {"levles": 6}})"), ValidationError);
    CHECK_THROWS_AS(parse_run_config(R"({"bogus": 1})"), ValidationError);
    CHECK_THROWS_AS(parse_run_config(R"({"schema_version": 99})"), ValidationError);
    CHECK_THROWS_AS(parse_run_config(R"({"estimator": {"alpha": "high"}})"), ValidationError);
    // Physical consistency is checked when the scenario is validated, not while parsing.
    CHECK_THROWS_AS(parse_run_config(R"({"scenario": {"duration": 0}})").scenario.validate(),
                    ValidationError);
    CHECK_THROWS_AS(parse_run_config("{}", {"estimator.alpha"}), ValidationError);
    CHECK_THROWS_AS(parse_run_config("{}", {"cascade.mode=flux"}), ValidationError);
    try {
        (void)parse_run_config(R"({"converter": {"levles": 6}})");
        FAIL("no exception");
    } catch (const ValidationError& e) {
        CHECK_THAT(e.what(), Catch::Matchers::ContainsSubstring("converter.levles"));
    }
}

TEST_CASE("overrides take precedence over the file", "[config]") {
    const RunConfig cfg = parse_run_config(R"({"estimator": {"alpha": 0.02}})", {"estimator.alpha=0.3"});
    CHECK(cfg.scenario.estimator.alpha == 0.3);
}

TEST_CASE("mode and psi names", "[config]") {
    for (auto m : {ConverterMode::DcDc, ConverterMode::AcDcBoost, ConverterMode::AcDcBuck}) {
        CHECK(parse_mode(mode_name(m)) == m);
    }
    for (auto p : {PsiShape::Dc, PsiShape::AbsSin}) {
        CHECK(parse_psi(psi_name(p)) == p);
    }
    CHECK_THROWS_AS(parse_mode("buck"), ValidationError);
}

TEST_CASE("default Bode grid", "[config]") {
    const auto f = default_bode_frequencies();
    REQUIRE(f.size() == 31);
    CHECK(f.front() == Catch::Approx(10.0));
    CHECK(f.back() == Catch::Approx(1000.0));
}

TEST_CASE("number formatting round-trips exactly", "[csv][property]") {
    std::mt19937_64 rng(17);
    std::uniform_int_distribution<std::uint64_t> bits;
    for (int i = 0; i < 20000; ++i) {
        double v;
        const std::uint64_t b = bits(rng);
        std::memcpy(&v, &b, sizeof v);
        if (!std::isfinite(v)) {
            continue;
        }
        const std::string text = format_double(v);
        double back = 0.0;
        const auto res = std::from_chars(text.data(), text.data() + text.size(), back);
        CHECK(res.ec == std::errc{});
        CHECK(back == v);
    }
    CHECK(format_double(0.1) == "0.1");
    CHECK(format_double(NAN) == "nan");
    CHECK(format_double(INFINITY) == "inf");
    CHECK(format_double(-INFINITY) == "-inf");
}

TEST_CASE("CSV write and read back", "[csv]") {
    const fs::path dir = scratch_dir("csv");
    const fs::path file = dir / "x.csv";
    {
        CsvWriter w(file, {"a", "b"});
        w.row({1.0 / 3.0, -2.5e-300});
        w.row({std::numeric_limits<double>::max(), 0.0});
        CHECK_FALSE(fs::exists(file));
        w.commit();
    }
    const CsvTable t = read_csv(file);
    REQUIRE(t.header == std::vector<std::string>{"a", "b"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0][0] == 1.0 / 3.0);
    CHECK(t.rows[0][1] == -2.5e-300);
    CHECK(t.rows[1][0] == std::numeric_limits<double>::max());
    CHECK(t.column("b") == 1);
    CHECK_THROWS_AS(t.column("c"), ValidationError);
}

TEST_CASE("an uncommitted CSV leaves nothing behind", "[csv]") {
    const fs::path dir = scratch_dir("partial");
    {
        CsvWriter w(dir / "y.csv", {"a"});
        w.row({1.0});
    }
    CHECK(fs::is_empty(dir));
    CsvWriter w(dir / "z.csv", {"a", "b"});
    CHECK_THROWS_AS(w.row({1.0}), ValidationError);
}

TEST_CASE("waveform CSV matches the log", "[csv]") {
    Scenario sc = Scenario::table3();
    sc.duration = 1e-3;
    sc.events.clear();
    const auto log = run_scenario(sc);
    const fs::path dir = scratch_dir("wave");
    write_waveforms_csv(log, dir / "waveforms.csv");
    const CsvTable t = read_csv(dir / "waveforms.csv");
    CHECK(t.header == waveform_columns(6));
    CHECK(t.header.size() == 1 + 4 + 4 + 4 + 5 + 5);
    REQUIRE(t.rows.size() == log.samples());
    const std::size_t il = t.column("iL");
    const std::size_t vc3 = t.column("vc_3");
    const std::size_t d5 = t.column("d_5");
    for (std::size_t n = 0; n < log.samples(); ++n) {
        CHECK(t.rows[n][0] == log.t[n]);
        CHECK(t.rows[n][il] == log.il[n]);
        CHECK(t.rows[n][vc3] == log.vc[n][2]);
        CHECK(t.rows[n][d5] == log.duty[n][4]);
    }
    const std::string summary = summary_text(log, sc);
    CHECK_THAT(summary, Catch::Matchers::ContainsSubstring("overall.max_switch_stress_V:"));
    CHECK_THAT(summary, Catch::Matchers::ContainsSubstring("settling_time_s:"));
}
