// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "qkdlink/budget.hpp"
#include "qkdlink/channel.hpp"
#include "qkdlink/cli/report.hpp"
#include "qkdlink/optics.hpp"
#include "qkdlink/protocol.hpp"

using namespace qkdlink;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

protocol::QberEstimate simulate(const budget::LinkScenario& scenario, std::uint64_t per_setting, std::uint64_t seed,
                                protocol::Sampling sampling = protocol::Sampling::skip_ahead) {
    const protocol::ProtocolConfig config{protocol::Mode::setting_scan, per_setting, seed, 1, sampling};
    const auto q = protocol::qber(protocol::sift(protocol::run(config, scenario.link())));
    return q.value_or(protocol::QberEstimate{});
}

// 1. Vacuum operating point: 0.86% +/- 0.05 pp over >= 1e7 windows, <= 60 s.
Outcome vacuum_operating_point() {
    const auto vacuum = *budget::find_preset("vacuum");
    constexpr std::uint64_t per_setting = 125'000'000;  // 1e9 windows
    auto start = std::chrono::steady_clock::now();
    const auto q = simulate(vacuum, per_setting, 2010);
    const double t_skip = seconds_since(start);

    // Literal window-by-window pipeline over 1e7 windows, for the runtime bound.
    start = std::chrono::steady_clock::now();
    const auto literal = simulate(vacuum, 1'250'000, 2011, protocol::Sampling::per_window);
    const double t_literal = seconds_since(start);

    const bool pass = std::abs(q.qber - 0.0086) <= 0.0005 && t_skip <= 60.0 && t_literal <= 60.0;
    return {pass, fmt::format("QBER {:.5f} +/- {:.5f} over {} windows (target 0.0086 +/- 0.0005), {:.2f} s; "
                              "per-window run of 1e7 windows: QBER {:.5f} +/- {:.5f} in {:.2f} s",
                              q.qber, q.std_error, 8 * per_setting, t_skip, literal.qber, literal.std_error,
                              t_literal)};
}

// 2. Bromine operating point: 7.68% +/- 0.3 pp, 20 dB exactly, secure.
Outcome bromine_operating_point() {
    const auto calibration = budget::reference_calibration();
    const auto bromine = *budget::find_preset("bromine", calibration);
    constexpr std::uint64_t per_setting = 400'000'000;  // 3.2e9 windows
    const auto q = simulate(bromine, per_setting, 2012);
    const auto report = budget::evaluate(bromine.link());
    const auto simulated_verdict = budget::assess(q.qber, report.loss_db);
    const bool dark_close = std::abs(calibration.dark_rate_hz - 161.2) / 161.2 <= 0.02;
    const bool pass = std::abs(q.qber - 0.0768) <= 0.003 && report.loss_db == 20.0 && report.secure &&
                      simulated_verdict.secure && dark_close;
    return {pass, fmt::format("QBER {:.5f} +/- {:.5f} over {} windows (target 0.0768 +/- 0.003), loss {} dB, "
                              "secure {} (simulated {}), calibrated dark rate {:.3f} Hz total",
                              q.qber, q.std_error, 8 * per_setting, report.loss_db, report.secure,
                              simulated_verdict.secure, calibration.dark_rate_hz)};
}

// 3. Path-length table: six rows within 1%, two reported with their deviations.
Outcome path_length_table() {
    const auto start = std::chrono::steady_clock::now();
    const auto rows = cli::path_checks();
    int within = 0;
    std::string flagged;
    for (const auto& r : rows) {
        if (r.flagged) {
            flagged += fmt::format(" {} ({:.2f} vs {}, {:+.2f}%)", r.profile.name(), r.formula_length_km,
                                   *r.reference_length_km, 100.0 * *r.relative_deviation);
        } else {
            ++within;
        }
    }
    const bool expected_flags = rows.size() == 8 && rows[5].flagged && rows[7].flagged;
    const double elapsed = seconds_since(start);
    return {within == 6 && expected_flags && elapsed < 1.0,
            fmt::format("{}/8 rows within 1%; flagged:{}; {:.1e} s", within, flagged, elapsed)};
}

// 4. Monte Carlo vs analytic QBER within 4 standard errors for every preset.
Outcome analytic_agreement() {
    bool pass = true;
    std::string detail;
    std::uint64_t seed = 3000;
    for (const auto& preset : budget::presets()) {
        const auto q = simulate(preset, 50'000'000, seed++);
        const double expected = budget::evaluate(preset.link()).expected_qber;
        const double z = q.std_error > 0.0 ? (q.qber - expected) / q.std_error : 0.0;
        const bool ok = q.n_sifted > 0 && std::abs(q.qber - expected) <= 4.0 * q.std_error;
        pass = pass && ok;
        detail += fmt::format("\n      {:<20} simulated {:.5f} +/- {:.5f}, analytic {:.5f}, z {:+.2f}{}",
                              preset.name, q.qber, q.std_error, expected, z, ok ? "" : "  <-- FAIL");
    }
    return {pass, fmt::format("{} presets, 4e8 windows each{}", budget::presets().size(), detail)};
}

// 5. Invariant suites.
Outcome invariants() {
    std::mt19937_64 rng(55);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int failures = 0;
    const auto check = [&](bool ok) { failures += ok ? 0 : 1; };

    for (int i = 0; i < 20'000; ++i) {
        const optics::PolarizationState s(360.0 * u(rng) - 180.0, 1.0 + std::pow(10.0, 6.0 * u(rng)));
        for (const auto basis : {optics::Basis::VH, optics::Basis::LR}) {
            const auto p = optics::pbs_probabilities(s, basis);
            check(std::abs(p.p0 + p.p1 - 1.0) <= 1e-12);
        }
        const optics::HwpSetting plate{180.0 * u(rng) - 90.0};
        const double back = optics::hwp_transform(optics::hwp_transform(s, plate), plate).angle_deg();
        check(std::abs(std::remainder(back - s.angle_deg(), 180.0)) <= 1e-9);

        const double k = std::pow(10.0, -3.0 + 4.0 * u(rng));
        const double l = 1e3 * u(rng);
        if (k * l < 700.0) {
            const double round = channel::equivalent_path(k, channel::transmittance(k, l));
            check(std::abs(round - l) <= 1e-10 * std::max(l, 1e-300) || l == 0.0);
            const double l1 = l * u(rng);
            const double split = channel::transmittance(k, l1).value() * channel::transmittance(k, l - l1).value();
            check(std::abs(channel::transmittance(k, l).value() - split) <= 1e-12);
        }
    }

    auto link = budget::find_preset("bromine")->link();
    link.detector.dark_rate_hz = 2e5;
    for (const auto mode : {protocol::Mode::setting_scan, protocol::Mode::random_bb84}) {
        protocol::ProtocolConfig config{mode, 3 * protocol::chunk_windows + 11, 99, 1, protocol::Sampling::skip_ahead};
        const auto reference = protocol::run(config, link);
        for (const unsigned workers : {2U, 4U, 7U}) {
            config.worker_streams = workers;
            check(protocol::run(config, link) == reference);
        }
        check(reference.windows() == config.total_windows());
        if (mode == protocol::Mode::setting_scan) {
            for (const auto& cell : reference.cells) {
                check(cell.windows() == config.n_windows);
            }
        }
        const auto q = protocol::qber(protocol::sift(reference));
        check(q && q->qber >= 0.0 && q->qber <= 1.0);
    }

    protocol::LinkParams ideal;
    ideal.optics = {optics::ideal_extinction_ratio, 0.0, 1.0};
    ideal.source = {632.8, 0.5};
    ideal.detector = {0.38, 78.0, 0.0};
    check(protocol::sift(protocol::run({protocol::Mode::random_bb84, 1'000'000, 5, 1, protocol::Sampling::per_window},
                                       ideal))
              .wrong == 0);

    return {failures == 0, fmt::format("{} violations (normalization, HWP involution, round trip, composability, "
                                       "QBER bounds, conservation, worker-count determinism)",
                                       failures)};
}

// 6. Calibration round trip to 1e-12.
Outcome calibration_round_trip() {
    const auto c = budget::reference_calibration();
    const double vacuum = *budget::analytic_qber(c.e_opt, 1e5, c.dark_rate_hz);
    const double bromine = *budget::analytic_qber(c.e_opt, 1e5 * 0.01, c.dark_rate_hz);
    const double rv = std::abs(vacuum - 0.0086) / 0.0086;
    const double rb = std::abs(bromine - 0.0768) / 0.0768;
    return {rv <= 1e-12 && rb <= 1e-12,
            fmt::format("e_opt {:.10f}, dark {:.6f} Hz -> vacuum {} (rel err {:.1e}), bromine {} (rel err {:.1e})",
                        c.e_opt, c.dark_rate_hz, vacuum, rv, bromine, rb)};
}

// 7. Bromine chemistry against the hand calculation.
Outcome bromine_chemistry() {
    // c = 2600 / (8.314462618 * 293) / 1000 mol/L, A = 1.3 * c * 2240 = 3.10787
    constexpr double hand_decadic = 7.8006269081820351e-4;
    constexpr double hand_natural = 0.044696034576646680;
    const auto check = cli::bromine_check(channel::BromineCell{1.3, 26.0, 293.0, 22.4});
    const bool pass = std::abs(check.decadic - hand_decadic) <= 1e-9 * hand_decadic &&
                      std::abs(check.natural - hand_natural) <= 1e-9 * hand_natural &&
                      std::abs(check.decadic - 7.8e-4) <= 0.01 * 7.8e-4 &&
                      std::abs(check.natural - 0.044) <= 0.02 * 0.044 && check.measured == 0.01 && check.discrepancy;
    return {pass, fmt::format("decadic {:.4e}, natural {:.4f}, measured {}, discrepancy flagged {}", check.decadic,
                              check.natural, check.measured, check.discrepancy)};
}

// 8. Security verdicts.
Outcome security_verdicts() {
    const auto a = budget::assess(0.0677, 10.0);
    const auto b = budget::assess(0.05, 157.0);
    const auto b2 = budget::assess(0.5, 157.0);
    const auto c = budget::assess(0.115, 5.0);
    const bool pass = a.secure && !b.secure && b.limiting_factor == budget::LimitingFactor::loss_limit &&
                      !b2.secure && b2.limiting_factor == budget::LimitingFactor::loss_limit && !c.secure &&
                      c.limiting_factor == budget::LimitingFactor::qber_limit;
    return {pass, fmt::format("(6.77%, 10 dB) secure {}; (5%, 157 dB) {}; (50%, 157 dB) {}; (11.5%, 5 dB) {}",
                              a.secure, budget::to_string(b.limiting_factor), budget::to_string(b2.limiting_factor),
                              budget::to_string(c.limiting_factor))};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"AC1 vacuum operating point", vacuum_operating_point},
        {"AC2 bromine operating point", bromine_operating_point},
        {"AC3 path-length table", path_length_table},
        {"AC4 analytic vs Monte Carlo, all presets", analytic_agreement},
        {"AC5 invariant suites", invariants},
        {"AC6 calibration round trip", calibration_round_trip},
        {"AC7 bromine chemistry cross-check", bromine_chemistry},
        {"AC8 security verdicts", security_verdicts},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, fmt::format("exception: {}", e.what())};
        }
        failed += o.pass ? 0 : 1;
        fmt::print("[{}] {}: {}\n", o.pass ? "PASS" : "FAIL", name, o.detail);
        std::fflush(stdout);
    }
    fmt::print("{} of {} criteria passed\n", criteria.size() - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
