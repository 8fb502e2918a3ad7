#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qkdlink/channel.hpp"
#include "qkdlink/detector.hpp"
#include "qkdlink/optics.hpp"
#include "qkdlink/protocol.hpp"

namespace qkdlink::budget {

/// Measured operating points and thresholds of the laboratory link.
namespace reference {
inline constexpr double vacuum_qber = 0.0086;
inline constexpr double bromine_qber = 0.0768;
inline constexpr double bromine_fraction = channel::measured_bromine_transmittance;
/// Detected count rate with the cell evacuated.
inline constexpr double vacuum_count_rate_hz = 1e5;
/// Mean photon number per window quoted for the same setup.
inline constexpr double quoted_mean_photons = 7.8e-4;
inline constexpr double extinction_ratio = 1000.0;
inline constexpr double quantum_efficiency = 0.38;
inline constexpr double dead_time_ns = 78.0;
inline constexpr double wavelength_nm = 632.8;
inline constexpr double max_secure_qber = 0.11;
inline constexpr double max_secure_loss_db = 40.0;
/// 144 km free-space horizontal link.
inline constexpr double horizontal_link_loss_db = 10.0;
inline constexpr double horizontal_link_qber = 0.0677;
inline constexpr double satellite_downlink_loss_db = 157.0;
}  // namespace reference

/// (e_opt R_sig + R_dark / 2) / (R_sig + R_dark). Empty when both rates are zero.
/// Throws DomainError for e_opt outside [0, 0.5] or negative rates.
std::optional<double> analytic_qber(double e_opt, double signal_rate_hz, double dark_rate_total_hz);

enum class CalibrationMode {
    /// e_opt is the vacuum QBER; the dark rate alone explains the absorbed point.
    optics_only,
    /// e_opt and dark rate solved together so both points are reproduced exactly.
    joint,
};

std::string_view to_string(CalibrationMode mode) noexcept;

struct CalibrationResult {
    double e_opt = 0.0;
    double dark_rate_hz = 0.0;  ///< both detectors together

    double dark_rate_per_detector_hz() const noexcept { return dark_rate_hz / 2.0; }
};

/// Fits the intrinsic optical error and the dark rate to a vacuum and an absorbed
/// operating point. Throws NoSolutionError when the points cannot be reproduced
/// (absorbed_qber >= 0.5, or inconsistent points in joint mode).
CalibrationResult calibrate(double vacuum_qber, double absorbed_qber, double vacuum_rate_hz,
                            double transmitted_fraction, CalibrationMode mode = CalibrationMode::joint);

/// Calibration against the two measured laboratory points.
CalibrationResult reference_calibration(CalibrationMode mode = CalibrationMode::joint);

struct SecurityThresholds {
    double max_qber = reference::max_secure_qber;
    double max_loss_db = reference::max_secure_loss_db;
};

enum class LimitingFactor { none, qber_limit, loss_limit };

std::string_view to_string(LimitingFactor factor) noexcept;

struct Verdict {
    bool secure = false;
    LimitingFactor limiting_factor = LimitingFactor::none;
};

/// Secure iff qber < max_qber and loss < max_loss_db. The loss limit is reported
/// first when both are violated.
Verdict assess(double qber, double loss_db, const SecurityThresholds& thresholds = {});

/// Matched-basis error probability of the optical chain.
double optical_error(const optics::OpticsParams& optics);

/// Detected signal clicks per second (both detectors), first order in the mean photon number.
double signal_rate_hz(const protocol::LinkParams& link);

double dark_rate_total_hz(const protocol::LinkParams& link);

struct LinkBudgetReport {
    double loss_db = 0.0;
    double expected_qber = 0.0;
    double e_opt = 0.0;
    double signal_rate_hz = 0.0;
    double dark_rate_total_hz = 0.0;
    double sifted_rate_hz = 0.0;  ///< half the click rate
    bool secure = false;
    LimitingFactor limiting_factor = LimitingFactor::none;
};

/// Throws DomainError when the link produces no clicks at all.
LinkBudgetReport evaluate(const protocol::LinkParams& link, const SecurityThresholds& thresholds = {});

struct ExplicitTransmittance {
    double value = 1.0;
};

struct ProfilePath {
    channel::AtmosphereProfile profile;
    double length_km = 0.0;
};

struct BromineFill {
    channel::BromineCell cell;
    channel::AbsorbanceConvention convention = channel::AbsorbanceConvention::decadic;
};

using TransmittanceSource = std::variant<ExplicitTransmittance, ProfilePath, BromineFill>;

struct LinkScenario {
    std::string name;
    std::string description;
    TransmittanceSource channel = ExplicitTransmittance{};
    optics::OpticsParams optics;
    detector::SourceParams source;
    detector::DetectorParams detector;
    /// Values quoted for the situation this scenario reproduces, reported next to ours.
    std::optional<double> reference_qber;
    std::optional<double> reference_loss_db;

    channel::Transmittance transmittance() const;
    protocol::LinkParams link() const;
};

/// Optics, source and detectors of the laboratory setup under `calibration`.
LinkScenario calibrated_setup(const CalibrationResult& calibration);

/// vacuum, bromine, the eight atmosphere profiles, horizontal-144km,
/// satellite-downlink, bromine-chemistry.
std::vector<LinkScenario> presets(const CalibrationResult& calibration = reference_calibration());

std::optional<LinkScenario> find_preset(std::string_view name,
                                        const CalibrationResult& calibration = reference_calibration());

}  // namespace qkdlink::budget
