#include "qkdlink/budget.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "qkdlink/errors.hpp"

namespace qkdlink::budget {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::optional<double> analytic_qber(double e_opt, double signal_rate_hz, double dark_rate_total_hz) {
    if (!(e_opt >= 0.0 && e_opt <= 0.5)) {
        throw DomainError(fmt::format("optical error must lie in [0, 0.5] (got {})", e_opt));
    }
    if (!(signal_rate_hz >= 0.0) || !(dark_rate_total_hz >= 0.0)) {
        throw DomainError("rates must be >= 0");
    }
    const double total = signal_rate_hz + dark_rate_total_hz;
    if (total == 0.0) {
        return std::nullopt;
    }
    return (e_opt * signal_rate_hz + 0.5 * dark_rate_total_hz) / total;
}

std::string_view to_string(CalibrationMode mode) noexcept {
    return mode == CalibrationMode::joint ? "joint" : "optics_only";
}

CalibrationResult calibrate(double vacuum_qber, double absorbed_qber, double vacuum_rate_hz,
                            double transmitted_fraction, CalibrationMode mode) {
    if (!(transmitted_fraction > 0.0 && transmitted_fraction <= 1.0)) {
        throw DomainError("transmitted fraction must lie in (0, 1]");
    }
    if (!(vacuum_rate_hz > 0.0) || !std::isfinite(vacuum_rate_hz)) {
        throw DomainError("vacuum rate must be > 0");
    }
    if (!(absorbed_qber < 0.5)) {
        throw NoSolutionError("dark counts cannot push the QBER to 0.5 or beyond");
    }
    if (!(vacuum_qber >= 0.0 && vacuum_qber <= absorbed_qber)) {
        throw DomainError("expected 0 <= vacuum QBER <= absorbed QBER");
    }

    const double absorbed_rate = vacuum_rate_hz * transmitted_fraction;
    if (mode == CalibrationMode::optics_only) {
        return {vacuum_qber, absorbed_rate * (absorbed_qber - vacuum_qber) / (0.5 - absorbed_qber)};
    }

    // e R + d (1/2 - q_v) = q_v R  and  e R f + d (1/2 - q_a) = q_a R f.
    const double excess = absorbed_rate * (absorbed_qber - vacuum_qber);
    if (excess == 0.0) {
        return {vacuum_qber, 0.0};
    }
    const double denominator = (0.5 - absorbed_qber) - transmitted_fraction * (0.5 - vacuum_qber);
    if (!(denominator > 0.0)) {
        throw NoSolutionError("no dark rate reproduces both operating points at this attenuation");
    }
    const double dark = excess / denominator;
    const double e_opt = vacuum_qber - dark * (0.5 - vacuum_qber) / vacuum_rate_hz;
    if (e_opt < 0.0) {
        throw NoSolutionError("calibrated dark rate alone exceeds the vacuum QBER");
    }
    return {e_opt, dark};
}

CalibrationResult reference_calibration(CalibrationMode mode) {
    return calibrate(reference::vacuum_qber, reference::bromine_qber, reference::vacuum_count_rate_hz,
                     reference::bromine_fraction, mode);
}

std::string_view to_string(LimitingFactor factor) noexcept {
    switch (factor) {
        case LimitingFactor::none: return "none";
        case LimitingFactor::qber_limit: return "qber_limit";
        case LimitingFactor::loss_limit: return "loss_limit";
    }
    return "?";
}

Verdict assess(double qber, double loss_db, const SecurityThresholds& thresholds) {
    if (!(loss_db < thresholds.max_loss_db)) {
        return {false, LimitingFactor::loss_limit};
    }
    if (!(qber < thresholds.max_qber)) {
        return {false, LimitingFactor::qber_limit};
    }
    return {true, LimitingFactor::none};
}

double optical_error(const optics::OpticsParams& optics) {
    return optics::matched_basis_error(optics.extinction_ratio, optics.misalignment_deg);
}

double signal_rate_hz(const protocol::LinkParams& link) {
    const double mean_at_bob =
        link.source.mean_photons_per_window * link.transmittance.value() * link.optics.bob_transmission;
    return detector::count_rate_for_mean_photons(mean_at_bob, link.detector);
}

double dark_rate_total_hz(const protocol::LinkParams& link) { return 2.0 * link.detector.dark_rate_hz; }

LinkBudgetReport evaluate(const protocol::LinkParams& link, const SecurityThresholds& thresholds) {
    link.validate();
    LinkBudgetReport r;
    r.loss_db = channel::loss_db(link.transmittance);
    r.e_opt = optical_error(link.optics);
    r.signal_rate_hz = signal_rate_hz(link);
    r.dark_rate_total_hz = dark_rate_total_hz(link);
    const auto q = analytic_qber(std::min(r.e_opt, 0.5), r.signal_rate_hz, r.dark_rate_total_hz);
    if (!q) {
        throw DomainError("link produces neither signal nor dark clicks");
    }
    r.expected_qber = *q;
    r.sifted_rate_hz = 0.5 * (r.signal_rate_hz + r.dark_rate_total_hz);
    const auto verdict = assess(r.expected_qber, r.loss_db, thresholds);
    r.secure = verdict.secure;
    r.limiting_factor = verdict.limiting_factor;
    return r;
}

channel::Transmittance LinkScenario::transmittance() const {
    return std::visit(overloaded{
                          [](const ExplicitTransmittance& t) { return channel::Transmittance(t.value); },
                          [](const ProfilePath& p) {
                              p.profile.validate();
                              return channel::transmittance(p.profile.k_per_km, p.length_km);
                          },
                          [](const BromineFill& b) { return channel::bromine_transmittance(b.cell, b.convention); },
                      },
                      channel);
}

protocol::LinkParams LinkScenario::link() const {
    protocol::LinkParams params{optics, transmittance(), source, detector};
    params.validate();
    return params;
}

LinkScenario calibrated_setup(const CalibrationResult& calibration) {
    LinkScenario s;
    s.detector.quantum_efficiency = reference::quantum_efficiency;
    s.detector.dead_time_ns = reference::dead_time_ns;
    s.detector.dark_rate_hz = calibration.dark_rate_per_detector_hz();
    s.optics.extinction_ratio = reference::extinction_ratio;
    s.optics.misalignment_deg = optics::misalignment_for_error(calibration.e_opt, reference::extinction_ratio);
    s.source.wavelength_nm = reference::wavelength_nm;
    s.source.mean_photons_per_window =
        detector::mean_photons_for_count_rate(reference::vacuum_count_rate_hz, s.detector);
    return s;
}

std::vector<LinkScenario> presets(const CalibrationResult& calibration) {
    const LinkScenario base = calibrated_setup(calibration);
    std::vector<LinkScenario> out;
    const auto add = [&](std::string name, std::string description, TransmittanceSource source,
                         std::optional<double> ref_qber = std::nullopt, std::optional<double> ref_loss = std::nullopt) {
        LinkScenario s = base;
        s.name = std::move(name);
        s.description = std::move(description);
        s.channel = std::move(source);
        s.reference_qber = ref_qber;
        s.reference_loss_db = ref_loss;
        out.push_back(std::move(s));
    };

    add("vacuum", "evacuated 22.4 m multipass cell", ExplicitTransmittance{1.0}, reference::vacuum_qber, 0.0);
    add("bromine", "cell filled with bromine vapour at 26 hPa, measured P/P0 = 0.01",
        ExplicitTransmittance{reference::bromine_fraction}, reference::bromine_qber, 20.0);
    for (const auto& profile : channel::profile_table()) {
        add(profile.name(),
            fmt::format("horizontal ground path, {} atmosphere, {} aerosols, {} km visibility",
                        channel::to_string(profile.season), channel::to_string(profile.aerosol),
                        profile.visibility_km),
            ProfilePath{profile, profile.reference_length_km.value_or(0.0)});
    }
    add("horizontal-144km", "144 km free-space horizontal link, 10 dB atmospheric loss",
        ExplicitTransmittance{channel::from_loss_db(reference::horizontal_link_loss_db).value()},
        reference::horizontal_link_qber, reference::horizontal_link_loss_db);
    add("satellite-downlink", "satellite to ground downlink, 157 dB total attenuation",
        ExplicitTransmittance{channel::from_loss_db(reference::satellite_downlink_loss_db).value()}, std::nullopt,
        reference::satellite_downlink_loss_db);
    add("bromine-chemistry", "bromine cell with transmittance predicted from molar absorptivity and pressure",
        BromineFill{});
    return out;
}

std::optional<LinkScenario> find_preset(std::string_view name, const CalibrationResult& calibration) {
    auto all = presets(calibration);
    const auto it = std::find_if(all.begin(), all.end(), [&](const LinkScenario& s) { return s.name == name; });
    if (it == all.end()) {
        return std::nullopt;
    }
    return std::move(*it);
}

}  // namespace qkdlink::budget
