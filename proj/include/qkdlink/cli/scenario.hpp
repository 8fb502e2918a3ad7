#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qkdlink/budget.hpp"
#include "qkdlink/channel.hpp"
#include "qkdlink/protocol.hpp"

namespace qkdlink::cli {

/// A link scenario together with how to simulate and judge it.
///
/// On disk this is a YAML document:
///
///     name: bromine
///     source:   {wavelength_nm: 632.8, mean_photons_per_window: 0.0205}
///     optics:   {extinction_ratio: 1000, misalignment_deg: 4.73}
///     channel:  {transmittance: 0.01}
///     detector: {quantum_efficiency: 0.38, dead_time_ns: 78, dark_rate_hz: 81.5}
///     protocol: {mode: setting_scan, n_windows: 10000000, seed: 1, worker_streams: 1}
///
/// `channel` holds exactly one of `transmittance`, `profile` or `bromine`.
struct ScenarioFile {
    budget::LinkScenario scenario;
    protocol::ProtocolConfig protocol;
    budget::SecurityThresholds thresholds;
};

/// Environment variable naming an extra profile table.
inline constexpr const char* profile_table_env = "QKDLINK_PROFILE_TABLE";

/// Rows of the table named by QKDLINK_PROFILE_TABLE, empty when unset.
std::vector<channel::AtmosphereProfile> user_profiles_from_env();

/// Throws ValidationError carrying the offending field and line.
ScenarioFile parse_scenario(std::string_view text, std::span<const channel::AtmosphereProfile> user_profiles = {});
ScenarioFile load_scenario(const std::filesystem::path& path,
                           std::span<const channel::AtmosphereProfile> user_profiles = {});

/// Applies the post-parse invariants (resolvable transmittance, parameter ranges).
void validate(const ScenarioFile& file);

/// Serializes so that parse_scenario(to_yaml(f)) reproduces f exactly.
std::string to_yaml(const ScenarioFile& file);

ScenarioFile preset_scenario(const budget::LinkScenario& preset);

}  // namespace qkdlink::cli
