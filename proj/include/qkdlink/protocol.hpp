#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string_view>

#include "qkdlink/channel.hpp"
#include "qkdlink/detector.hpp"
#include "qkdlink/optics.hpp"

namespace qkdlink::protocol {

enum class Mode { random_bb84, setting_scan };

/// per_window draws every window explicitly; skip_ahead jumps over empty windows
/// with geometric gaps and produces the same distribution of RunCounts.
enum class Sampling { per_window, skip_ahead };

std::string_view to_string(Mode mode) noexcept;
std::string_view to_string(Sampling sampling) noexcept;
std::optional<Mode> parse_mode(std::string_view text) noexcept;
std::optional<Sampling> parse_sampling(std::string_view text) noexcept;

struct ProtocolConfig {
    Mode mode = Mode::setting_scan;
    /// Total windows in random_bb84 mode, windows per setting in setting_scan mode.
    std::uint64_t n_windows = 10'000'000;
    std::uint64_t seed = 0;
    /// Threads consuming chunks. Does not influence the result.
    unsigned worker_streams = 1;
    Sampling sampling = Sampling::skip_ahead;

    void validate() const;
    std::uint64_t total_windows() const noexcept;
};

/// Every chunk of this many windows draws from its own stream seeded by (seed, cell, chunk).
inline constexpr std::uint64_t chunk_windows = std::uint64_t{1} << 20;

struct AliceState {
    optics::Bit bit;
    optics::Basis basis;
};

/// V, H, L, R in that order.
inline constexpr std::array<AliceState, 4> alice_states{{
    {optics::Bit::zero, optics::Basis::VH},
    {optics::Bit::one, optics::Basis::VH},
    {optics::Bit::zero, optics::Basis::LR},
    {optics::Bit::one, optics::Basis::LR},
}};

std::string_view state_name(std::size_t alice_index) noexcept;

inline constexpr std::size_t cell_count = 8;

constexpr std::size_t cell_index(std::size_t alice_index, optics::Basis bob) noexcept {
    return alice_index * 2 + (bob == optics::Basis::LR ? 1 : 0);
}

constexpr optics::Basis cell_bob_basis(std::size_t cell) noexcept {
    return cell % 2 == 0 ? optics::Basis::VH : optics::Basis::LR;
}

constexpr AliceState cell_alice_state(std::size_t cell) noexcept { return alice_states[cell / 2]; }

constexpr bool cell_is_sifted(std::size_t cell) noexcept {
    return cell_alice_state(cell).basis == cell_bob_basis(cell);
}

/// Tallies for one (Alice state, Bob basis) setting. Correct/wrong compare
/// Bob's single-click bit with Alice's bit, also in conjugate-basis cells.
struct CellCounts {
    std::uint64_t correct = 0;
    std::uint64_t wrong = 0;
    std::uint64_t double_clicks = 0;
    std::uint64_t empty_windows = 0;

    std::uint64_t windows() const noexcept { return correct + wrong + double_clicks + empty_windows; }
    CellCounts& operator+=(const CellCounts& other) noexcept;
    friend bool operator==(const CellCounts&, const CellCounts&) = default;
};

struct RunCounts {
    std::array<CellCounts, cell_count> cells{};

    CellCounts& at(std::size_t alice_index, optics::Basis bob) noexcept { return cells[cell_index(alice_index, bob)]; }
    const CellCounts& at(std::size_t alice_index, optics::Basis bob) const noexcept {
        return cells[cell_index(alice_index, bob)];
    }
    std::uint64_t windows() const noexcept;
    std::uint64_t double_clicks() const noexcept;
    RunCounts& operator+=(const RunCounts& other) noexcept;
    friend bool operator==(const RunCounts&, const RunCounts&) = default;
};

/// Everything between Alice's laser and Bob's counters.
struct LinkParams {
    optics::OpticsParams optics;
    channel::Transmittance transmittance{1.0};
    detector::SourceParams source;
    detector::DetectorParams detector;

    void validate() const;
};

/// Per-window click probabilities of Bob's bit-0 and bit-1 detectors for one setting.
struct CellModel {
    double click0 = 0.0;
    double click1 = 0.0;
};

/// Runs the window pipeline for every setting: encode, misalign, project on Bob's
/// basis, attenuate, then the detector click law.
std::array<CellModel, cell_count> cell_models(const LinkParams& link);

/// Simulates the configured number of windows. Identical inputs give identical
/// counts for any worker_streams value.
RunCounts run(const ProtocolConfig& config, const LinkParams& link);

struct SiftedCounts {
    std::uint64_t correct = 0;
    std::uint64_t wrong = 0;
};

/// Keeps single clicks from cells where Alice's and Bob's bases agree.
SiftedCounts sift(const RunCounts& counts) noexcept;

struct QberEstimate {
    double qber = 0.0;
    double std_error = 0.0;  ///< binomial, sqrt(q (1 - q) / n)
    std::uint64_t n_sifted = 0;
};

/// Empty when nothing was sifted.
std::optional<QberEstimate> qber(std::uint64_t correct, std::uint64_t wrong) noexcept;

inline std::optional<QberEstimate> qber(const SiftedCounts& sifted) noexcept {
    return qber(sifted.correct, sifted.wrong);
}

}  // namespace qkdlink::protocol
