#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string_view>

namespace qkdlink::optics {

// Angles are degrees from vertical, clockwise positive.

enum class Basis : std::uint8_t { VH, LR };

/// 0 is vertical / left-diagonal, 1 is horizontal / right-diagonal.
enum class Bit : std::uint8_t { zero = 0, one = 1 };

constexpr Basis conjugate(Basis basis) noexcept {
    return basis == Basis::VH ? Basis::LR : Basis::VH;
}

constexpr Bit flip(Bit bit) noexcept { return bit == Bit::zero ? Bit::one : Bit::zero; }

std::string_view to_string(Basis basis) noexcept;

/// Maps any angle onto [-90, +90).
double normalize_angle_deg(double angle_deg) noexcept;

/// Axis of `bit` in `basis`: VH -> {0, 90}, LR -> {-45, +45}.
double basis_axis_deg(Basis basis, Bit bit) noexcept;

/// Plane-polarized light with a finite polarizer extinction ratio.
///
/// The leaked orthogonal power fraction is 1 / (1 + extinction_ratio). An
/// infinite ratio is allowed and describes an ideal polarizer.
class PolarizationState {
  public:
    PolarizationState(double angle_deg, double extinction_ratio);

    double angle_deg() const noexcept { return angle_deg_; }
    double extinction_ratio() const noexcept { return extinction_ratio_; }
    double leakage() const noexcept { return 1.0 / (1.0 + extinction_ratio_); }

    /// Same state turned by `delta_deg` (e.g. a residual mount misalignment).
    PolarizationState rotated(double delta_deg) const;

  private:
    double angle_deg_;
    double extinction_ratio_;
};

/// Fast-axis angle of a half-wave plate.
struct HwpSetting {
    double plate_angle_deg = 0.0;
};

namespace plate {
inline constexpr HwpSetting vertical{0.0};
inline constexpr HwpSetting horizontal{45.0};
inline constexpr HwpSetting left_diagonal{-22.5};
inline constexpr HwpSetting right_diagonal{22.5};
/// Bob's plate in front of the PBS when measuring in LR.
inline constexpr HwpSetting bob_lr{22.5};
}  // namespace plate

/// Alice's plate position producing `bit` in `basis` from vertical laser light.
HwpSetting alice_setting(Bit bit, Basis basis) noexcept;

/// Ideal half-wave plate: reflects the polarization plane about the fast axis.
PolarizationState hwp_transform(const PolarizationState& state, HwpSetting plate) noexcept;

/// Throws DomainError unless extinction_ratio > 1.
PolarizationState encode(Bit bit, Basis basis, double extinction_ratio);

struct ArmProbabilities {
    double p0 = 0.0;  ///< bit-0 output of the PBS
    double p1 = 0.0;
};

/// Malus projection onto `basis`, mixed with the polarizer leakage.
ArmProbabilities pbs_probabilities(const PolarizationState& state, Basis basis) noexcept;

struct OpticsParams {
    double extinction_ratio = 1000.0;
    double misalignment_deg = 0.0;
    /// Bob-side transmission (lenses, PBS insertion loss).
    double bob_transmission = 1.0;

    void validate() const;
};

/// Probability that a photon sent and measured in the same basis lands in the wrong arm.
double matched_basis_error(double extinction_ratio, double misalignment_deg);

/// Inverse of matched_basis_error in the misalignment angle, result in [0, 45].
/// Throws DomainError when `error_probability` lies outside [leakage, 0.5].
double misalignment_for_error(double error_probability, double extinction_ratio);

inline constexpr double ideal_extinction_ratio = std::numeric_limits<double>::infinity();

}  // namespace qkdlink::optics
