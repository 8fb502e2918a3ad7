#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "qkdlink/cli/commands.hpp"

namespace {

using namespace qkdlink::cli;

void add_selection(CLI::App* cmd, ScenarioSelection& sel) {
    cmd->add_option("--scenario", sel.scenario, "Scenario file (YAML)");
    cmd->add_option("--preset", sel.preset, "Built-in scenario name (see `qkdlink presets`)");
    cmd->add_option("--seed", sel.seed, "Override the protocol seed");
    cmd->add_option("--windows", sel.windows, "Override n_windows");
    cmd->add_option("--workers", sel.workers, "Override worker_streams (threads)");
}

void add_output(CLI::App* cmd, OutputOptions& out) {
    const std::map<std::string, Format> formats{{"human", Format::human}, {"machine", Format::machine}};
    cmd->add_option("--format", out.format, "Output format: human or machine")
        ->transform(CLI::CheckedTransformer(formats, CLI::ignore_case));
    cmd->add_option("--out", out.out, "Write to this file instead of standard output");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"BB84 link simulator and atmospheric link-budget calculator"};
    app.require_subcommand(1);

    ScenarioSelection selection;
    OutputOptions output;
    SweepOptions sweep;
    std::optional<std::string> preset_name;

    auto* run = app.add_subcommand("run", "Simulate a scenario and report QBER, loss and verdict");
    add_selection(run, selection);
    add_output(run, output);

    auto* table = app.add_subcommand("table", "Equivalent path lengths of the atmosphere profiles");
    add_output(table, output);

    auto* sweep_cmd = app.add_subcommand("sweep", "Sweep one parameter and emit plot data (CSV)");
    add_selection(sweep_cmd, selection);
    add_output(sweep_cmd, output);
    sweep_cmd->add_option("--param", sweep.parameter,
                          "transmittance, length_km, dark_rate_hz or mean_photons_per_window")
        ->required();
    sweep_cmd->add_option("--from", sweep.from, "First value")->required();
    sweep_cmd->add_option("--to", sweep.to, "Last value")->required();
    sweep_cmd->add_option("--steps", sweep.steps, "Number of points")->capture_default_str();
    const std::map<std::string, Spacing> spacings{{"linear", Spacing::linear}, {"log", Spacing::log}};
    sweep_cmd->add_option("--spacing", sweep.spacing, "linear or log")
        ->transform(CLI::CheckedTransformer(spacings, CLI::ignore_case));

    auto* presets = app.add_subcommand("presets", "List built-in scenarios, or print one as a scenario file");
    presets->add_option("--preset", preset_name, "Print this preset as YAML");
    add_output(presets, output);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_code::ok : exit_code::validation;
    }

    if (run->parsed()) {
        return cmd_run(selection, output, std::cout, std::cerr);
    }
    if (table->parsed()) {
        return cmd_table(output, std::cout, std::cerr);
    }
    if (sweep_cmd->parsed()) {
        return cmd_sweep(selection, sweep, output, std::cout, std::cerr);
    }
    return cmd_presets(preset_name, output, std::cout, std::cerr);
}
