#include "qkdlink/cli/commands.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "qkdlink/cli/report.hpp"
#include "qkdlink/errors.hpp"

namespace qkdlink::cli {

namespace {

/// Runs `body` writing either to `out` or to the --out file, mapping exceptions to exit codes.
int guarded(const OutputOptions& output, std::ostream& out, std::ostream& err,
            const std::function<void(std::ostream&)>& body) {
    try {
        if (output.out) {
            std::ostringstream buffer;
            body(buffer);
            std::ofstream file(*output.out, std::ios::binary);
            if (!file || !(file << buffer.str())) {
                fmt::print(err, "error: cannot write '{}'\n", output.out->string());
                return exit_code::runtime;
            }
        } else {
            body(out);
        }
        return exit_code::ok;
    } catch (const ValidationError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return exit_code::validation;
    } catch (const std::exception& e) {
        fmt::print(err, "runtime error: {}\n", e.what());
        return exit_code::runtime;
    }
}

void apply_sweep_value(ScenarioFile& file, const std::string& parameter, double value) {
    auto& s = file.scenario;
    if (parameter == "transmittance") {
        s.channel = budget::ExplicitTransmittance{value};
    } else if (parameter == "length_km") {
        auto* path = std::get_if<budget::ProfilePath>(&s.channel);
        if (path == nullptr) {
            throw ValidationError("channel", 0, "sweeping length_km needs a profile channel");
        }
        path->length_km = value;
    } else if (parameter == "dark_rate_hz") {
        s.detector.dark_rate_hz = value;
    } else if (parameter == "mean_photons_per_window") {
        s.source.mean_photons_per_window = value;
    } else {
        throw ValidationError("parameter", 0,
                              fmt::format("'{}' is not sweepable (transmittance, length_km, dark_rate_hz, "
                                          "mean_photons_per_window)",
                                          parameter));
    }
}

std::vector<double> sweep_values(const SweepOptions& sweep) {
    if (sweep.steps < 1) {
        throw ValidationError("steps", 0, "steps must be >= 1");
    }
    if (!std::isfinite(sweep.from) || !std::isfinite(sweep.to)) {
        throw ValidationError("range", 0, "sweep range must be finite");
    }
    if (sweep.spacing == Spacing::log && !(sweep.from > 0.0 && sweep.to > 0.0)) {
        throw ValidationError("range", 0, "logarithmic sweeps need a positive range");
    }
    std::vector<double> values;
    for (std::uint64_t i = 0; i < sweep.steps; ++i) {
        const double f = sweep.steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(sweep.steps - 1);
        if (i == 0) {
            values.push_back(sweep.from);
        } else if (i + 1 == sweep.steps) {
            values.push_back(sweep.to);
        } else if (sweep.spacing == Spacing::linear) {
            values.push_back(sweep.from + f * (sweep.to - sweep.from));
        } else {
            values.push_back(std::exp(std::log(sweep.from) + f * (std::log(sweep.to) - std::log(sweep.from))));
        }
    }
    return values;
}

}  // namespace

ScenarioFile resolve(const ScenarioSelection& selection, std::span<const channel::AtmosphereProfile> user_rows) {
    if (selection.scenario.has_value() == selection.preset.has_value()) {
        throw ValidationError("scenario", 0, "give exactly one of --scenario or --preset");
    }
    ScenarioFile file;
    if (selection.scenario) {
        file = load_scenario(*selection.scenario, user_rows);
    } else {
        const auto preset = budget::find_preset(*selection.preset);
        if (!preset) {
            throw ValidationError("preset", 0, fmt::format("unknown preset '{}'", *selection.preset));
        }
        file = preset_scenario(*preset);
    }
    if (selection.seed) file.protocol.seed = *selection.seed;
    if (selection.windows) file.protocol.n_windows = *selection.windows;
    if (selection.workers) file.protocol.worker_streams = *selection.workers;
    validate(file);
    return file;
}

int cmd_run(const ScenarioSelection& selection, const OutputOptions& output, std::ostream& out, std::ostream& err) {
    ScenarioFile file;
    std::vector<channel::AtmosphereProfile> user_rows;
    try {
        user_rows = user_profiles_from_env();
        file = resolve(selection, user_rows);
    } catch (const ValidationError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return exit_code::validation;
    }
    return guarded(output, out, err, [&](std::ostream& os) {
        const auto report = make_report(file, user_rows);
        if (output.format == Format::machine) {
            write_machine(os, report);
        } else {
            write_human(os, report);
        }
    });
}

int cmd_table(const OutputOptions& output, std::ostream& out, std::ostream& err) {
    return guarded(output, out, err, [&](std::ostream& os) {
        const auto rows = path_checks(user_profiles_from_env());
        if (output.format == Format::machine) {
            fmt::print(os, "profile\tseason\taerosol\tvisibility_km\tk_per_km\tformula_length_km\t"
                           "reference_length_km\trelative_deviation\tflagged\n");
            for (const auto& r : rows) {
                fmt::print(os, "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", r.profile.name(),
                           channel::to_string(r.profile.season), channel::to_string(r.profile.aerosol),
                           format_number(r.profile.visibility_km), format_number(r.k_per_km),
                           format_number(r.formula_length_km), format_number(r.reference_length_km),
                           format_number(r.relative_deviation), r.flagged ? "true" : "false");
            }
            return;
        }
        fmt::print(os, "Equivalent horizontal path for P/P0 = 0.01 (L = -ln(0.01) / k)\n");
        fmt::print(os, "{:<20}{:>12}{:>14}{:>14}{:>12}\n", "profile", "k [1/km]", "L formula", "L reference",
                   "deviation");
        for (const auto& r : rows) {
            const std::string dev =
                r.relative_deviation ? fmt::format("{:.2f}%", 100.0 * *r.relative_deviation) : "-";
            fmt::print(os, "{:<20}{:>12}{:>14.2f}{:>14}{:>12}{}\n", r.profile.name(), format_number(r.k_per_km),
                       r.formula_length_km, r.reference_length_km ? format_number(*r.reference_length_km) : "-", dev,
                       r.flagged ? "  FLAGGED" : "");
        }
    });
}

int cmd_sweep(const ScenarioSelection& selection, const SweepOptions& sweep, const OutputOptions& output,
              std::ostream& out, std::ostream& err) {
    ScenarioFile base;
    std::vector<double> values;
    try {
        base = resolve(selection, user_profiles_from_env());
        values = sweep_values(sweep);
        apply_sweep_value(base, sweep.parameter, values.front());
    } catch (const ValidationError& e) {
        fmt::print(err, "error: {}\n", e.what());
        return exit_code::validation;
    }
    return guarded(output, out, err, [&](std::ostream& os) {
        fmt::print(os, "{},analytic_qber,simulated_qber,simulated_qber_stderr,n_sifted,loss_db,secure\n",
                   sweep.parameter);
        for (const double v : values) {
            ScenarioFile file = base;
            apply_sweep_value(file, sweep.parameter, v);
            validate(file);
            const auto link = file.scenario.link();
            const auto budget = budget::evaluate(link, file.thresholds);
            const auto q = protocol::qber(protocol::sift(protocol::run(file.protocol, link)));
            fmt::print(os, "{},{},{},{},{},{},{}\n", format_number(v), format_number(budget.expected_qber),
                       format_number(q ? std::optional(q->qber) : std::nullopt),
                       format_number(q ? std::optional(q->std_error) : std::nullopt), q ? q->n_sifted : 0,
                       format_number(budget.loss_db), budget.secure ? "true" : "false");
        }
    });
}

int cmd_presets(const std::optional<std::string>& name, const OutputOptions& output, std::ostream& out,
                std::ostream& err) {
    return guarded(output, out, err, [&](std::ostream& os) {
        if (name) {
            const auto preset = budget::find_preset(*name);
            if (!preset) {
                throw ValidationError("preset", 0, fmt::format("unknown preset '{}'", *name));
            }
            os << to_yaml(preset_scenario(*preset));
            return;
        }
        const auto all = budget::presets();
        if (output.format == Format::machine) {
            fmt::print(os, "name\ttransmittance\tloss_db\texpected_qber\tsecure\tlimiting_factor\treference_qber\n");
        }
        for (const auto& s : all) {
            const auto link = s.link();
            const auto b = budget::evaluate(link);
            if (output.format == Format::machine) {
                fmt::print(os, "{}\t{}\t{}\t{}\t{}\t{}\t{}\n", s.name, format_number(link.transmittance.value()),
                           format_number(b.loss_db), format_number(b.expected_qber), b.secure ? "true" : "false",
                           budget::to_string(b.limiting_factor), format_number(s.reference_qber));
            } else {
                fmt::print(os, "{:<20} loss {:>7.2f} dB  QBER {:>7.4f}  {:<9} {}\n", s.name, b.loss_db,
                           b.expected_qber, b.secure ? "secure" : "insecure", s.description);
            }
        }
    });
}

}  // namespace qkdlink::cli
