#include "qkdlink/cli/report.hpp"

#include <chrono>
#include <cmath>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace qkdlink::cli {

namespace {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::string flag(bool b) { return b ? "true" : "false"; }

std::string integer(std::uint64_t v) { return fmt::format("{}", v); }

std::string describe_channel(const budget::TransmittanceSource& source) {
    if (const auto* t = std::get_if<budget::ExplicitTransmittance>(&source)) {
        return fmt::format("explicit transmittance {}", format_number(t->value));
    }
    if (const auto* p = std::get_if<budget::ProfilePath>(&source)) {
        return fmt::format("profile {} over {} km", p->profile.name(), format_number(p->length_km));
    }
    const auto& b = std::get<budget::BromineFill>(source);
    return fmt::format("bromine cell ({} convention)", channel::to_string(b.convention));
}

std::string channel_kind(const budget::TransmittanceSource& source) {
    if (std::holds_alternative<budget::ExplicitTransmittance>(source)) return "transmittance";
    if (std::holds_alternative<budget::ProfilePath>(source)) return "profile";
    return "bromine";
}

std::optional<double> as_optional(const std::optional<protocol::QberEstimate>& q, double protocol::QberEstimate::*f) {
    if (!q) {
        return std::nullopt;
    }
    return (*q).*f;
}

/// All scalar values of the report, in machine order.
KeyValues summary(const ReportDocument& r) {
    const auto& s = r.input.scenario;
    const auto& p = r.input.protocol;
    const auto& b = r.budget;
    KeyValues kv;
    const auto add = [&](std::string key, std::string value) { kv.emplace_back(std::move(key), std::move(value)); };

    add("format", "qkdlink-report/1");
    add("scenario", s.name);
    add("mode", std::string(protocol::to_string(p.mode)));
    add("sampling", std::string(protocol::to_string(p.sampling)));
    add("seed", integer(p.seed));
    add("windows_per_setting", p.mode == protocol::Mode::setting_scan ? integer(p.n_windows) : "undefined");
    add("windows_total", integer(r.counts.windows()));
    add("worker_streams", integer(p.worker_streams));
    add("channel", channel_kind(s.channel));
    add("wavelength_nm", format_number(s.source.wavelength_nm));
    add("mean_photons_per_window", format_number(s.source.mean_photons_per_window));
    add("extinction_ratio", format_number(s.optics.extinction_ratio));
    add("misalignment_deg", format_number(s.optics.misalignment_deg));
    add("bob_transmission", format_number(s.optics.bob_transmission));
    add("quantum_efficiency", format_number(s.detector.quantum_efficiency));
    add("dead_time_ns", format_number(s.detector.dead_time_ns));
    add("dark_rate_per_detector_hz", format_number(s.detector.dark_rate_hz));
    add("transmittance", format_number(r.transmittance));
    add("loss_db", format_number(b.loss_db));
    add("e_opt", format_number(b.e_opt));
    add("signal_rate_hz", format_number(b.signal_rate_hz));
    add("dark_rate_total_hz", format_number(b.dark_rate_total_hz));
    add("sifted_rate_hz", format_number(b.sifted_rate_hz));
    add("sifted_correct", integer(r.sifted.correct));
    add("sifted_wrong", integer(r.sifted.wrong));
    add("double_clicks", integer(r.counts.double_clicks()));
    add("qber", format_number(as_optional(r.qber, &protocol::QberEstimate::qber)));
    add("qber_stderr", format_number(as_optional(r.qber, &protocol::QberEstimate::std_error)));
    add("analytic_qber", format_number(b.expected_qber));
    add("deviation_sigma", format_number(r.deviation_sigma));
    add("max_qber", format_number(r.input.thresholds.max_qber));
    add("max_loss_db", format_number(r.input.thresholds.max_loss_db));
    add("secure", flag(b.secure));
    add("limiting_factor", std::string(budget::to_string(b.limiting_factor)));
    add("secure_simulated", r.simulated_verdict ? flag(r.simulated_verdict->secure) : "undefined");
    add("reference_qber", format_number(s.reference_qber));
    add("reference_loss_db", format_number(s.reference_loss_db));
    add("bromine_transmittance_decadic", format_number(r.bromine.decadic));
    add("bromine_transmittance_natural", format_number(r.bromine.natural));
    add("bromine_transmittance_measured", format_number(r.bromine.measured));
    add("bromine_discrepancy", flag(r.bromine.discrepancy));
    std::size_t flagged = 0;
    for (const auto& row : r.paths) {
        flagged += row.flagged ? 1 : 0;
    }
    add("path_rows_flagged", integer(flagged));
    return kv;
}

}  // namespace

std::string format_number(double value) {
    if (!std::isfinite(value)) {
        return "undefined";
    }
    return fmt::format("{}", value);
}

std::string format_number(const std::optional<double>& value) {
    return value ? format_number(*value) : "undefined";
}

std::vector<PathCheck> path_checks(std::span<const channel::AtmosphereProfile> user_rows) {
    std::vector<PathCheck> rows;
    const auto add = [&](const channel::AtmosphereProfile& p) {
        PathCheck row;
        row.profile = p;
        row.k_per_km = p.k_per_km;
        row.formula_length_km =
            channel::equivalent_path(p.k_per_km, channel::Transmittance(channel::measured_bromine_transmittance));
        row.reference_length_km = p.reference_length_km;
        if (p.reference_length_km) {
            row.relative_deviation = (row.formula_length_km - *p.reference_length_km) / *p.reference_length_km;
            row.flagged = std::abs(*row.relative_deviation) > path_deviation_tolerance;
        }
        rows.push_back(row);
    };
    for (const auto& p : channel::profile_table()) {
        add(p);
    }
    for (const auto& p : user_rows) {
        add(p);
    }
    return rows;
}

BromineCheck bromine_check(const channel::BromineCell& cell) {
    BromineCheck c;
    c.decadic = channel::bromine_transmittance(cell, channel::AbsorbanceConvention::decadic).value();
    c.natural = channel::bromine_transmittance(cell, channel::AbsorbanceConvention::natural).value();
    const auto close = [&](double v) { return v >= c.measured / 2.0 && v <= c.measured * 2.0; };
    c.discrepancy = !close(c.decadic) && !close(c.natural);
    return c;
}

ReportDocument make_report(const ScenarioFile& input, std::span<const channel::AtmosphereProfile> user_rows) {
    validate(input);
    ReportDocument r;
    r.input = input;
    const auto link = input.scenario.link();
    r.transmittance = link.transmittance.value();
    r.budget = budget::evaluate(link, input.thresholds);

    const auto start = std::chrono::steady_clock::now();
    r.counts = protocol::run(input.protocol, link);
    r.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    r.sifted = protocol::sift(r.counts);
    r.qber = protocol::qber(r.sifted);
    if (r.qber) {
        if (r.qber->std_error > 0.0) {
            r.deviation_sigma = (r.qber->qber - r.budget.expected_qber) / r.qber->std_error;
        }
        r.simulated_verdict = budget::assess(r.qber->qber, r.budget.loss_db, input.thresholds);
    }
    if (const auto* fill = std::get_if<budget::BromineFill>(&input.scenario.channel)) {
        r.bromine = bromine_check(fill->cell);
    } else {
        r.bromine = bromine_check();
    }
    r.paths = path_checks(user_rows);
    return r;
}

void write_machine(std::ostream& out, const ReportDocument& report) {
    for (const auto& [key, value] : summary(report)) {
        fmt::print(out, "{}\t{}\n", key, value);
    }
    for (std::size_t c = 0; c < protocol::cell_count; ++c) {
        const auto& cell = report.counts.cells[c];
        const auto prefix =
            fmt::format("cell.{}.{}", protocol::state_name(c / 2), optics::to_string(protocol::cell_bob_basis(c)));
        fmt::print(out, "{}.correct\t{}\n", prefix, cell.correct);
        fmt::print(out, "{}.wrong\t{}\n", prefix, cell.wrong);
        fmt::print(out, "{}.double\t{}\n", prefix, cell.double_clicks);
        fmt::print(out, "{}.empty\t{}\n", prefix, cell.empty_windows);
    }
    for (const auto& row : report.paths) {
        const auto prefix = fmt::format("path.{}", row.profile.name());
        fmt::print(out, "{}.k_per_km\t{}\n", prefix, format_number(row.k_per_km));
        fmt::print(out, "{}.formula_length_km\t{}\n", prefix, format_number(row.formula_length_km));
        fmt::print(out, "{}.reference_length_km\t{}\n", prefix, format_number(row.reference_length_km));
        fmt::print(out, "{}.relative_deviation\t{}\n", prefix, format_number(row.relative_deviation));
        fmt::print(out, "{}.flagged\t{}\n", prefix, flag(row.flagged));
    }
}

void write_human(std::ostream& out, const ReportDocument& report) {
    const auto& s = report.input.scenario;
    const auto kv = summary(report);
    const auto get = [&](std::string_view key) -> const std::string& {
        for (const auto& [k, v] : kv) {
            if (k == key) {
                return v;
            }
        }
        static const std::string missing = "undefined";
        return missing;
    };

    fmt::print(out, "Scenario {}", s.name);
    if (!s.description.empty()) {
        fmt::print(out, " ({})", s.description);
    }
    fmt::print(out, "\n  channel: {}\n", describe_channel(s.channel));
    fmt::print(out, "  run: mode {}, sampling {}, seed {}, {} windows ({} per setting), worker streams {}, {} s\n",
               get("mode"), get("sampling"), get("seed"), get("windows_total"), get("windows_per_setting"),
               get("worker_streams"), format_number(report.wall_time_s));
    fmt::print(out, "  source: {} nm, mean photons per window {}\n", get("wavelength_nm"),
               get("mean_photons_per_window"));
    fmt::print(out, "  optics: extinction ratio {}, misalignment {} deg, Bob transmission {}\n",
               get("extinction_ratio"), get("misalignment_deg"), get("bob_transmission"));
    fmt::print(out, "  detectors: efficiency {}, dead time {} ns, dark rate {} Hz each\n", get("quantum_efficiency"),
               get("dead_time_ns"), get("dark_rate_per_detector_hz"));

    fmt::print(out, "\nPer-setting counts\n");
    fmt::print(out, "  {:<6}{:<6}{:>14}{:>14}{:>14}{:>16}\n", "Alice", "Bob", "correct", "wrong", "double", "empty");
    for (std::size_t c = 0; c < protocol::cell_count; ++c) {
        const auto& cell = report.counts.cells[c];
        fmt::print(out, "  {:<6}{:<6}{:>14}{:>14}{:>14}{:>16}{}\n", protocol::state_name(c / 2),
                   optics::to_string(protocol::cell_bob_basis(c)), cell.correct, cell.wrong, cell.double_clicks,
                   cell.empty_windows, protocol::cell_is_sifted(c) ? "" : "  (conjugate)");
    }

    fmt::print(out, "\nLink budget\n");
    fmt::print(out, "  transmittance        {}\n", get("transmittance"));
    fmt::print(out, "  loss                 {} dB\n", get("loss_db"));
    fmt::print(out, "  optical error        {}\n", get("e_opt"));
    fmt::print(out, "  signal click rate    {} Hz\n", get("signal_rate_hz"));
    fmt::print(out, "  dark click rate      {} Hz\n", get("dark_rate_total_hz"));
    fmt::print(out, "  sifted rate          {} Hz\n", get("sifted_rate_hz"));
    fmt::print(out, "  sifted events        {} correct, {} wrong ({} double clicks dropped)\n", get("sifted_correct"),
               get("sifted_wrong"), get("double_clicks"));
    fmt::print(out, "  simulated QBER       {} +/- {}\n", get("qber"), get("qber_stderr"));
    fmt::print(out, "  analytic QBER        {} (deviation {} sigma)\n", get("analytic_qber"), get("deviation_sigma"));
    fmt::print(out, "  reference QBER       {}\n", get("reference_qber"));
    fmt::print(out, "  reference loss       {} dB\n", get("reference_loss_db"));
    fmt::print(out, "  verdict              {} (limiting factor {}; thresholds QBER < {}, loss < {} dB)\n",
               report.budget.secure ? "secure" : "insecure", get("limiting_factor"), get("max_qber"),
               get("max_loss_db"));
    fmt::print(out, "  simulated verdict    {}\n", get("secure_simulated"));

    fmt::print(out, "\nCross-checks\n");
    fmt::print(out, "  bromine cell transmittance: decadic {}, natural {}, measured {}{}\n",
               get("bromine_transmittance_decadic"), get("bromine_transmittance_natural"),
               get("bromine_transmittance_measured"),
               report.bromine.discrepancy ? "  [DISCREPANCY: chemistry does not reproduce the measurement]" : "");
    for (const auto& row : report.paths) {
        if (row.flagged) {
            fmt::print(out, "  path {}: formula {} km vs reference {} km (deviation {})  [FLAGGED]\n",
                       row.profile.name(), format_number(row.formula_length_km),
                       format_number(row.reference_length_km), format_number(row.relative_deviation));
        }
    }
}

}  // namespace qkdlink::cli
