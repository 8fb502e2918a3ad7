#include "qkdlink/optics.hpp"

#include <cmath>
#include <numbers>

#include "qkdlink/errors.hpp"

namespace qkdlink::optics {

namespace {

constexpr double deg_to_rad = std::numbers::pi / 180.0;

void require_extinction_ratio(double ratio) {
    // NaN fails this comparison as well.
    if (!(ratio > 1.0)) {
        throw DomainError("extinction ratio must be > 1");
    }
}

}  // namespace

std::string_view to_string(Basis basis) noexcept { return basis == Basis::VH ? "VH" : "LR"; }

double normalize_angle_deg(double angle_deg) noexcept {
    double a = std::fmod(angle_deg + 90.0, 180.0);
    if (a < 0.0) {
        a += 180.0;
    }
    // fmod of a tiny negative value can round up to exactly 180.
    if (a >= 180.0) {
        a -= 180.0;
    }
    return a - 90.0;
}

double basis_axis_deg(Basis basis, Bit bit) noexcept {
    if (basis == Basis::VH) {
        return bit == Bit::zero ? 0.0 : 90.0;
    }
    return bit == Bit::zero ? -45.0 : 45.0;
}

PolarizationState::PolarizationState(double angle_deg, double extinction_ratio)
    : angle_deg_(normalize_angle_deg(angle_deg)), extinction_ratio_(extinction_ratio) {
    require_extinction_ratio(extinction_ratio);
    if (!std::isfinite(angle_deg)) {
        throw DomainError("polarization angle must be finite");
    }
}

PolarizationState PolarizationState::rotated(double delta_deg) const {
    return {angle_deg_ + delta_deg, extinction_ratio_};
}

HwpSetting alice_setting(Bit bit, Basis basis) noexcept {
    if (basis == Basis::VH) {
        return bit == Bit::zero ? plate::vertical : plate::horizontal;
    }
    return bit == Bit::zero ? plate::left_diagonal : plate::right_diagonal;
}

PolarizationState hwp_transform(const PolarizationState& state, HwpSetting plate) noexcept {
    return {2.0 * plate.plate_angle_deg - state.angle_deg(), state.extinction_ratio()};
}

PolarizationState encode(Bit bit, Basis basis, double extinction_ratio) {
    require_extinction_ratio(extinction_ratio);
    return {basis_axis_deg(basis, bit), extinction_ratio};
}

ArmProbabilities pbs_probabilities(const PolarizationState& state, Basis basis) noexcept {
    const double delta = (state.angle_deg() - basis_axis_deg(basis, Bit::zero)) * deg_to_rad;
    const double c = std::cos(delta);
    const double m0 = c * c;
    const double leak = state.leakage();
    const double p0 = (1.0 - leak) * m0 + leak * (1.0 - m0);
    return {p0, 1.0 - p0};
}

void OpticsParams::validate() const {
    require_extinction_ratio(extinction_ratio);
    if (!std::isfinite(misalignment_deg)) {
        throw DomainError("misalignment must be finite");
    }
    if (!(bob_transmission > 0.0 && bob_transmission <= 1.0)) {
        throw DomainError("Bob-side transmission must lie in (0, 1]");
    }
}

double matched_basis_error(double extinction_ratio, double misalignment_deg) {
    const auto state = encode(Bit::zero, Basis::VH, extinction_ratio).rotated(misalignment_deg);
    return pbs_probabilities(state, Basis::VH).p1;
}

double misalignment_for_error(double error_probability, double extinction_ratio) {
    require_extinction_ratio(extinction_ratio);
    const double leak = 1.0 / (1.0 + extinction_ratio);
    if (!(error_probability >= leak && error_probability <= 0.5)) {
        throw DomainError("optical error probability must lie in [leakage, 0.5]");
    }
    const double sin2 = (error_probability - leak) / (1.0 - 2.0 * leak);
    return std::asin(std::sqrt(sin2)) / deg_to_rad;
}

}  // namespace qkdlink::optics
