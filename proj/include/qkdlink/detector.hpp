#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qkdlink::detector {

using Rng = std::mt19937_64;

/// One SPAD. The discrimination window equals the dead time.
struct DetectorParams {
    double quantum_efficiency = 0.38;
    double dead_time_ns = 78.0;
    double dark_rate_hz = 0.0;  ///< per detector

    double window_s() const noexcept { return dead_time_ns * 1e-9; }
    void validate() const;
};

struct SourceParams {
    double wavelength_nm = 632.8;
    double mean_photons_per_window = 7.8e-4;  ///< at the channel input

    void validate() const;
};

/// Mean photons per window needed for `detected_rate_hz` clicks per second with an
/// unattenuated channel, ignoring dark counts.
double mean_photons_for_count_rate(double detected_rate_hz, const DetectorParams& params);

/// Inverse of mean_photons_for_count_rate.
double count_rate_for_mean_photons(double mean_photons_per_window, const DetectorParams& params);

enum class WindowOutcome : std::uint8_t { none, det0, det1, both };

std::string_view to_string(WindowOutcome outcome) noexcept;

/// Probability of at least one click in a window for Poisson arrivals plus dark counts:
/// 1 - exp(-(eta mu + r_dark w)).
double click_probability(double mean_photons_at_arm, const DetectorParams& params);

/// Draws the two arms independently. Consumes exactly two uniforms from `rng`.
WindowOutcome simulate_window(double mean0, double mean1, const DetectorParams& params, Rng& rng);

/// Same as above with precomputed click probabilities.
WindowOutcome sample_window(double click0, double click1, Rng& rng);

}  // namespace qkdlink::detector
