#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "qkdlink/cli/commands.hpp"
#include "qkdlink/cli/report.hpp"
#include "qkdlink/cli/scenario.hpp"
#include "qkdlink/errors.hpp"

using namespace qkdlink;
using namespace qkdlink::cli;

namespace {

const char* const bromine_yaml = R"(name: lab
source:
  wavelength_nm: 632.8
  mean_photons_per_window: 0.020526315789473684
optics:
  extinction_ratio: 1000
  misalignment_deg: 4.734771907929295
channel:
  transmittance: 0.01
detector:
  quantum_efficiency: 0.38
  dead_time_ns: 78
  dark_rate_hz: 81.52316835849156
protocol:
  mode: setting_scan
  n_windows: 1e7
  seed: 7
  worker_streams: 1
)";

std::filesystem::path write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream(path) << text;
    return path;
}

std::map<std::string, std::string> parse_machine(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        REQUIRE(tab != std::string::npos);
        kv[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return kv;
}

std::string replace(std::string text, const std::string& from, const std::string& to) {
    const auto pos = text.find(from);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, from.size(), to);
}

int expect_validation_line(const std::string& text) {
    try {
        parse_scenario(text);
    } catch (const ValidationError& e) {
        return static_cast<int>(e.line());
    }
    FAIL("expected a validation error");
    return -1;
}

}  // namespace

TEST_CASE("scenario parsing") {
    const auto file = parse_scenario(bromine_yaml);
    CHECK(file.scenario.name == "lab");
    CHECK(file.scenario.transmittance().value() == 0.01);
    CHECK(file.protocol.n_windows == 10'000'000);
    CHECK(file.protocol.seed == 7);
    CHECK(file.protocol.mode == protocol::Mode::setting_scan);
    CHECK(file.scenario.optics.bob_transmission == 1.0);
    CHECK(file.thresholds.max_qber == 0.11);
}

TEST_CASE("scenario channel variants") {
    const auto profile = parse_scenario(replace(
        bromine_yaml, "  transmittance: 0.01\n",
        "  profile: {season: summer, aerosol: urban, visibility_km: 5, length_km: 17.6}\n"));
    CHECK(profile.scenario.transmittance().value() == doctest::Approx(0.0099398832883229219).epsilon(1e-12));

    const auto bromine = parse_scenario(replace(
        bromine_yaml, "  transmittance: 0.01\n",
        "  bromine: {pressure_hpa: 26, temperature_k: 293, path_m: 22.4, epsilon: 1.3, convention: natural}\n"));
    CHECK(bromine.scenario.transmittance().value() == doctest::Approx(0.044696034576646680).epsilon(1e-11));

    // Two variants at once.
    CHECK_THROWS_AS(parse_scenario(replace(bromine_yaml, "  transmittance: 0.01\n",
                                           "  transmittance: 0.01\n  bromine: {pressure_hpa: 26, temperature_k: "
                                           "293, path_m: 22.4, epsilon: 1.3}\n")),
                    ValidationError);
    // Unknown profile.
    CHECK_THROWS_AS(parse_scenario(replace(bromine_yaml, "  transmittance: 0.01\n",
                                           "  profile: {season: summer, aerosol: urban, visibility_km: 7, "
                                           "length_km: 1}\n")),
                    ValidationError);
}

TEST_CASE("user profiles extend the lookup") {
    const std::vector<channel::AtmosphereProfile> user{{channel::Season::summer, channel::Aerosol::urban, 7.0, 0.5, {}}};
    const auto file = parse_scenario(replace(bromine_yaml, "  transmittance: 0.01\n",
                                             "  profile: {season: summer, aerosol: urban, visibility_km: 7, "
                                             "length_km: 2}\n"),
                                     user);
    CHECK(file.scenario.transmittance().value() == doctest::Approx(std::exp(-1.0)));
}

TEST_CASE("scenario diagnostics carry line numbers") {
    CHECK(expect_validation_line(replace(bromine_yaml, "  n_windows: 1e7", "  n_windows: 0")) == 16);
    CHECK(expect_validation_line(replace(bromine_yaml, "  quantum_efficiency: 0.38", "  quantum_efficiency: 1.5")) ==
          11);
    CHECK(expect_validation_line(replace(bromine_yaml, "  dead_time_ns: 78", "  dead_time_ns: fast")) == 12);
    CHECK(expect_validation_line(replace(bromine_yaml, "  seed: 7", "  seed: 7\n  colour: blue")) == 18);
    CHECK(expect_validation_line(replace(bromine_yaml, "  transmittance: 0.01", "  transmittance: 1.5")) == 9);
    CHECK(expect_validation_line(replace(bromine_yaml, "source:", "source: [1, 2")) >= 2);
    CHECK_THROWS_AS(parse_scenario("name: x\n"), ValidationError);
    try {
        parse_scenario(replace(bromine_yaml, "  mode: setting_scan", "  mode: scan"));
        FAIL("expected a validation error");
    } catch (const ValidationError& e) {
        CHECK(e.field() == "protocol.mode");
    }
}

TEST_CASE("scenario YAML round trip") {
    for (const auto& preset : budget::presets()) {
        const auto file = preset_scenario(preset);
        const auto again = parse_scenario(to_yaml(file));
        CHECK(to_yaml(again) == to_yaml(file));
        CHECK(again.scenario.transmittance().value() == file.scenario.transmittance().value());
        CHECK(again.scenario.source.mean_photons_per_window == file.scenario.source.mean_photons_per_window);
        CHECK(again.scenario.optics.misalignment_deg == file.scenario.optics.misalignment_deg);
    }
}

TEST_CASE("run: machine output is byte-identical and matches the human output") {
    const auto path = write_temp("qkdlink_test_scenario.yaml", bromine_yaml);
    ScenarioSelection sel;
    sel.scenario = path;
    std::ostringstream first, second, human, err;
    CHECK(cmd_run(sel, {Format::machine, {}}, first, err) == exit_code::ok);
    CHECK(cmd_run(sel, {Format::machine, {}}, second, err) == exit_code::ok);
    CHECK(first.str() == second.str());
    CHECK(cmd_run(sel, {Format::human, {}}, human, err) == exit_code::ok);

    const auto kv = parse_machine(first.str());
    for (const char* key : {"qber", "qber_stderr", "analytic_qber", "loss_db", "transmittance", "e_opt",
                            "signal_rate_hz", "dark_rate_total_hz", "sifted_correct", "sifted_wrong",
                            "bromine_transmittance_decadic", "bromine_transmittance_natural"}) {
        INFO(key);
        CHECK(human.str().find(kv.at(key)) != std::string::npos);
    }
    CHECK(kv.at("loss_db") == "20");
    CHECK(kv.at("secure") == "true");
    CHECK(kv.at("windows_total") == "80000000");
    CHECK(std::stod(kv.at("qber")) == doctest::Approx(0.0768).epsilon(0.1));
    for (const auto& [key, value] : kv) {
        CHECK(value.find("nan") == std::string::npos);
        CHECK(value.find("inf") == std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("run: writes to --out and reports validation failures") {
    ScenarioSelection sel;
    sel.preset = "vacuum";
    sel.windows = 1'000'000;
    const auto out_path = std::filesystem::temp_directory_path() / "qkdlink_test_report.tsv";
    std::ostringstream out, err;
    CHECK(cmd_run(sel, {Format::machine, out_path}, out, err) == exit_code::ok);
    CHECK(out.str().empty());
    std::ifstream in(out_path);
    std::stringstream file_text;
    file_text << in.rdbuf();
    const auto kv = parse_machine(file_text.str());
    CHECK(kv.at("scenario") == "vacuum");
    std::filesystem::remove(out_path);

    sel.windows = 0;
    CHECK(cmd_run(sel, {}, out, err) == exit_code::validation);
    CHECK(err.str().find("n_windows") != std::string::npos);

    ScenarioSelection unknown;
    unknown.preset = "jupiter";
    CHECK(cmd_run(unknown, {}, out, err) == exit_code::validation);
    ScenarioSelection both;
    both.preset = "vacuum";
    both.scenario = "x.yaml";
    CHECK(cmd_run(both, {}, out, err) == exit_code::validation);
    ScenarioSelection missing;
    missing.scenario = "/nonexistent/scenario.yaml";
    CHECK(cmd_run(missing, {}, out, err) == exit_code::validation);
}

TEST_CASE("table command") {
    std::ostringstream out, err;
    CHECK(cmd_table({Format::machine, {}}, out, err) == exit_code::ok);
    std::istringstream rows(out.str());
    std::string line;
    std::getline(rows, line);  // header
    int count = 0;
    int flagged = 0;
    while (std::getline(rows, line)) {
        ++count;
        flagged += line.ends_with("true") ? 1 : 0;
    }
    CHECK(count == 8);
    CHECK(flagged == 2);
    CHECK(out.str().find("winter-urban-13km\twinter\turban\t13\t0.0838\t54.95") != std::string::npos);

    std::ostringstream human;
    CHECK(cmd_table({}, human, err) == exit_code::ok);
    CHECK(human.str().find("17.58") != std::string::npos);
    CHECK(human.str().find("4.28%  FLAGGED") != std::string::npos);
}

TEST_CASE("table picks up the user profile table from the environment") {
    const auto path = write_temp("qkdlink_profiles.csv", "# extra\nwinter, urban, 2, 0.7\n");
    ::setenv(profile_table_env, path.c_str(), 1);
    std::ostringstream out, err;
    CHECK(cmd_table({Format::machine, {}}, out, err) == exit_code::ok);
    CHECK(out.str().find("winter-urban-2km") != std::string::npos);
    ::unsetenv(profile_table_env);
    std::filesystem::remove(path);
}

TEST_CASE("sweep: QBER rises with attenuation and the verdict flips once") {
    ScenarioSelection sel;
    sel.preset = "bromine";
    sel.windows = 2'000'000;
    std::ostringstream out, err;
    const SweepOptions sweep{"transmittance", 1.0, 1e-4, 9, Spacing::log};
    REQUIRE(cmd_sweep(sel, sweep, {}, out, err) == exit_code::ok);

    std::istringstream rows(out.str());
    std::string line;
    std::getline(rows, line);
    CHECK(line == "transmittance,analytic_qber,simulated_qber,simulated_qber_stderr,n_sifted,loss_db,secure");
    double previous_qber = -1.0;
    int flips = 0;
    std::string previous_secure;
    bool saw_operating_point = false;
    while (std::getline(rows, line)) {
        std::vector<std::string> f;
        std::istringstream fields(line);
        for (std::string cell; std::getline(fields, cell, ',');) {
            f.push_back(cell);
        }
        REQUIRE(f.size() == 7);
        const double t = std::stod(f[0]);
        const double q = std::stod(f[1]);
        CHECK(q > previous_qber);
        CHECK(q < 0.5);
        previous_qber = q;
        if (!previous_secure.empty() && f[6] != previous_secure) {
            ++flips;
        }
        previous_secure = f[6];
        if (std::abs(t - 0.01) < 1e-12) {
            saw_operating_point = true;
            CHECK(q == doctest::Approx(0.0768).epsilon(1e-9));
            CHECK(std::abs(std::stod(f[2]) - q) <= 4.0 * std::stod(f[3]));
        }
    }
    CHECK(flips == 1);
    CHECK(saw_operating_point);
}

TEST_CASE("sweep rejects unknown or unsupported parameters") {
    ScenarioSelection sel;
    sel.preset = "bromine";
    std::ostringstream out, err;
    CHECK(cmd_sweep(sel, {"colour", 0.0, 1.0, 3, Spacing::linear}, {}, out, err) == exit_code::validation);
    CHECK(cmd_sweep(sel, {"length_km", 0.0, 1.0, 3, Spacing::linear}, {}, out, err) == exit_code::validation);
    CHECK(cmd_sweep(sel, {"transmittance", 0.0, 1.0, 3, Spacing::log}, {}, out, err) == exit_code::validation);
    CHECK(cmd_sweep(sel, {"transmittance", 1.0, 0.5, 0, Spacing::linear}, {}, out, err) == exit_code::validation);

    sel.preset = "summer-urban-5km";
    sel.windows = 100'000;
    std::ostringstream ok;
    CHECK(cmd_sweep(sel, {"length_km", 0.0, 20.0, 3, Spacing::linear}, {}, ok, err) == exit_code::ok);
    // Out-of-range values inside the sweep are runtime errors of that step.
    std::ostringstream bad;
    CHECK(cmd_sweep(sel, {"dark_rate_hz", 10.0, -10.0, 3, Spacing::linear}, {}, bad, err) == exit_code::validation);
}

TEST_CASE("presets command") {
    std::ostringstream out, err;
    CHECK(cmd_presets(std::nullopt, {Format::machine, {}}, out, err) == exit_code::ok);
    CHECK(out.str().find("satellite-downlink\t") != std::string::npos);
    CHECK(out.str().find("loss_limit") != std::string::npos);

    std::ostringstream yaml;
    CHECK(cmd_presets(std::string("bromine"), {}, yaml, err) == exit_code::ok);
    CHECK(parse_scenario(yaml.str()).scenario.transmittance().value() == 0.01);
    CHECK(cmd_presets(std::string("nope"), {}, yaml, err) == exit_code::validation);
}

TEST_CASE("bromine cross-check and path checks") {
    const auto b = bromine_check();
    CHECK(b.decadic == doctest::Approx(7.8006269081820351e-4).epsilon(1e-11));
    CHECK(b.natural == doctest::Approx(0.044696034576646680).epsilon(1e-11));
    CHECK(b.measured == 0.01);
    CHECK(b.discrepancy);
    const auto rows = path_checks();
    REQUIRE(rows.size() == 8);
    CHECK(rows[5].flagged);
    CHECK(rows[7].flagged);
    CHECK(*rows[5].relative_deviation == doctest::Approx(0.042776056207762025).epsilon(1e-10));
}

TEST_CASE("number formatting") {
    CHECK(format_number(0.5) == "0.5");
    CHECK(format_number(20.0) == "20");
    CHECK(format_number(std::nan("")) == "undefined");
    CHECK(format_number(std::optional<double>{}) == "undefined");
}
