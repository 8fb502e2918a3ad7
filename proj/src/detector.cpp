#include "qkdlink/detector.hpp"

#include <cmath>

#include "qkdlink/errors.hpp"

namespace qkdlink::detector {

void DetectorParams::validate() const {
    if (!(quantum_efficiency > 0.0 && quantum_efficiency <= 1.0)) {
        throw DomainError("quantum efficiency must lie in (0, 1]");
    }
    if (!(dead_time_ns > 0.0) || !std::isfinite(dead_time_ns)) {
        throw DomainError("dead time must be > 0");
    }
    if (!(dark_rate_hz >= 0.0) || !std::isfinite(dark_rate_hz)) {
        throw DomainError("dark count rate must be >= 0");
    }
}

void SourceParams::validate() const {
    if (!(wavelength_nm > 0.0) || !std::isfinite(wavelength_nm)) {
        throw DomainError("wavelength must be > 0");
    }
    if (!(mean_photons_per_window >= 0.0) || !std::isfinite(mean_photons_per_window)) {
        throw DomainError("mean photon number must be >= 0");
    }
}

double mean_photons_for_count_rate(double detected_rate_hz, const DetectorParams& params) {
    params.validate();
    if (!(detected_rate_hz >= 0.0)) {
        throw DomainError("count rate must be >= 0");
    }
    return detected_rate_hz * params.window_s() / params.quantum_efficiency;
}

double count_rate_for_mean_photons(double mean_photons_per_window, const DetectorParams& params) {
    params.validate();
    return params.quantum_efficiency * mean_photons_per_window / params.window_s();
}

std::string_view to_string(WindowOutcome outcome) noexcept {
    switch (outcome) {
        case WindowOutcome::none: return "none";
        case WindowOutcome::det0: return "det0";
        case WindowOutcome::det1: return "det1";
        case WindowOutcome::both: return "both";
    }
    return "?";
}

double click_probability(double mean_photons_at_arm, const DetectorParams& params) {
    if (!(mean_photons_at_arm >= 0.0)) {
        throw DomainError("mean photon number at a detector must be >= 0");
    }
    const double exponent = params.quantum_efficiency * mean_photons_at_arm + params.dark_rate_hz * params.window_s();
    return -std::expm1(-exponent);
}

WindowOutcome sample_window(double click0, double click1, Rng& rng) {
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const bool c0 = uniform(rng) < click0;
    const bool c1 = uniform(rng) < click1;
    if (c0) {
        return c1 ? WindowOutcome::both : WindowOutcome::det0;
    }
    return c1 ? WindowOutcome::det1 : WindowOutcome::none;
}

WindowOutcome simulate_window(double mean0, double mean1, const DetectorParams& params, Rng& rng) {
    return sample_window(click_probability(mean0, params), click_probability(mean1, params), rng);
}

}  // namespace qkdlink::detector
