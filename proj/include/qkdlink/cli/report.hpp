#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "qkdlink/budget.hpp"
#include "qkdlink/cli/scenario.hpp"
#include "qkdlink/protocol.hpp"

namespace qkdlink::cli {

/// One row of the atmosphere table next to the 1% equivalent path.
struct PathCheck {
    channel::AtmosphereProfile profile;
    double k_per_km = 0.0;
    double formula_length_km = 0.0;
    std::optional<double> reference_length_km;
    std::optional<double> relative_deviation;
    bool flagged = false;  ///< deviation beyond 1%
};

inline constexpr double path_deviation_tolerance = 0.01;

/// Equivalent paths for P/P0 = 0.01 over the built-in rows followed by `user_rows`.
std::vector<PathCheck> path_checks(std::span<const channel::AtmosphereProfile> user_rows = {});

struct BromineCheck {
    double decadic = 0.0;
    double natural = 0.0;
    double measured = channel::measured_bromine_transmittance;
    /// Neither convention within a factor of two of the measurement.
    bool discrepancy = false;
};

BromineCheck bromine_check(const channel::BromineCell& cell = {});

struct ReportDocument {
    ScenarioFile input;
    double wall_time_s = 0.0;

    protocol::RunCounts counts;
    protocol::SiftedCounts sifted;
    std::optional<protocol::QberEstimate> qber;

    double transmittance = 1.0;
    budget::LinkBudgetReport budget;
    /// (simulated - analytic) / stderr, when the simulation sifted anything.
    std::optional<double> deviation_sigma;
    std::optional<budget::Verdict> simulated_verdict;

    BromineCheck bromine;
    std::vector<PathCheck> paths;
};

/// Runs the simulation and the analytic budget for `input`.
ReportDocument make_report(const ScenarioFile& input, std::span<const channel::AtmosphereProfile> user_rows = {});

/// Tab-separated `key<TAB>value` lines in a fixed order. Deterministic for a given input.
void write_machine(std::ostream& out, const ReportDocument& report);

/// Same values as write_machine, laid out for reading, plus wall time.
void write_human(std::ostream& out, const ReportDocument& report);

/// Shortest round-trip representation; "undefined" for empty or non-finite values.
std::string format_number(double value);
std::string format_number(const std::optional<double>& value);

}  // namespace qkdlink::cli
