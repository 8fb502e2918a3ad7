#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "qkdlink/cli/scenario.hpp"

namespace qkdlink::cli {

enum class Format { human, machine };

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation = 1;
inline constexpr int runtime = 2;
}  // namespace exit_code

/// Where a scenario comes from plus command-line overrides of its protocol section.
struct ScenarioSelection {
    std::optional<std::filesystem::path> scenario;
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> windows;
    std::optional<unsigned> workers;
};

/// Loads the file or preset and applies the overrides. Throws ValidationError.
ScenarioFile resolve(const ScenarioSelection& selection, std::span<const channel::AtmosphereProfile> user_rows);

struct OutputOptions {
    Format format = Format::human;
    std::optional<std::filesystem::path> out;
};

int cmd_run(const ScenarioSelection& selection, const OutputOptions& output, std::ostream& out, std::ostream& err);

int cmd_table(const OutputOptions& output, std::ostream& out, std::ostream& err);

enum class Spacing { linear, log };

struct SweepOptions {
    std::string parameter;  ///< transmittance, length_km, dark_rate_hz, mean_photons_per_window
    double from = 0.0;
    double to = 0.0;
    std::uint64_t steps = 10;
    Spacing spacing = Spacing::linear;
};

/// Comma-separated rows: value, analytic QBER, simulated QBER and stderr, sifted events, loss, verdict.
int cmd_sweep(const ScenarioSelection& selection, const SweepOptions& sweep, const OutputOptions& output,
              std::ostream& out, std::ostream& err);

/// Lists presets, or writes one as a scenario file when `name` is given.
int cmd_presets(const std::optional<std::string>& name, const OutputOptions& output, std::ostream& out,
                std::ostream& err);

}  // namespace qkdlink::cli
