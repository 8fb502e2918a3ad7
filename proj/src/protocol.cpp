#include "qkdlink/protocol.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <random>
#include <span>
#include <thread>
#include <vector>

#include "qkdlink/errors.hpp"

namespace qkdlink::protocol {

namespace {

using detector::Rng;
using detector::WindowOutcome;
using CellTallies = std::array<CellCounts, cell_count>;

constexpr std::uint32_t random_mode_tag = 0xB8B4;

struct Job {
    std::uint32_t tag;  ///< cell index in scan mode, random_mode_tag otherwise
    std::uint64_t chunk;
    std::uint64_t windows;
};

Rng make_stream(std::uint64_t seed, std::uint32_t tag, std::uint64_t chunk) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), tag,
                      static_cast<std::uint32_t>(chunk), static_cast<std::uint32_t>(chunk >> 32)};
    return Rng(seq);
}

void tally(CellCounts& cell, std::size_t cell_idx, WindowOutcome outcome) noexcept {
    const bool alice_one = cell_alice_state(cell_idx).bit == optics::Bit::one;
    switch (outcome) {
        case WindowOutcome::none: ++cell.empty_windows; break;
        case WindowOutcome::both: ++cell.double_clicks; break;
        case WindowOutcome::det0: ++(alice_one ? cell.wrong : cell.correct); break;
        case WindowOutcome::det1: ++(alice_one ? cell.correct : cell.wrong); break;
    }
}

/// Candidate cells of a chunk with their selection weights (sum to one).
struct Mixture {
    std::vector<std::size_t> cells;
    std::vector<double> weights;
};

Mixture job_mixture(const Job& job) {
    if (job.tag == random_mode_tag) {
        Mixture m;
        for (std::size_t c = 0; c < cell_count; ++c) {
            m.cells.push_back(c);
            m.weights.push_back(1.0 / cell_count);
        }
        return m;
    }
    return {{job.tag}, {1.0}};
}

void simulate_per_window(const Job& job, const std::array<CellModel, cell_count>& models, Rng& rng,
                         CellTallies& out) {
    std::uniform_int_distribution<std::size_t> pick_cell(0, cell_count - 1);
    const bool random_mode = job.tag == random_mode_tag;
    for (std::uint64_t w = 0; w < job.windows; ++w) {
        const std::size_t c = random_mode ? pick_cell(rng) : job.tag;
        const auto outcome = detector::sample_window(models[c].click0, models[c].click1, rng);
        tally(out[c], c, outcome);
    }
}

/// Distributes `n` windows over the cells with probabilities proportional to `mass`.
void multinomial_split(std::uint64_t n, std::span<const std::size_t> cells, std::span<const double> mass, Rng& rng,
                       CellTallies& out) {
    double remaining_mass = 0.0;
    for (const double m : mass) {
        remaining_mass += m;
    }
    for (std::size_t i = 0; i < cells.size() && n > 0; ++i) {
        std::uint64_t k = n;
        if (i + 1 < cells.size()) {
            const double p = remaining_mass > 0.0 ? std::clamp(mass[i] / remaining_mass, 0.0, 1.0) : 0.0;
            k = std::binomial_distribution<std::uint64_t>(n, p)(rng);
        }
        out[cells[i]].empty_windows += k;
        n -= k;
        remaining_mass -= mass[i];
    }
}

void simulate_skip_ahead(const Job& job, const std::array<CellModel, cell_count>& models, Rng& rng,
                         CellTallies& out) {
    const Mixture mix = job_mixture(job);
    const std::size_t k = mix.cells.size();

    std::vector<double> event_mass(k);
    std::vector<double> empty_mass(k);
    std::vector<std::discrete_distribution<int>> outcome_given_event(k);
    double q = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        const auto [c0, c1] = models[mix.cells[i]];
        const double any = c0 + c1 - c0 * c1;
        event_mass[i] = mix.weights[i] * any;
        empty_mass[i] = mix.weights[i] * (1.0 - c0) * (1.0 - c1);
        q += event_mass[i];
        if (any > 0.0) {
            outcome_given_event[i] = std::discrete_distribution<int>({c0 * (1.0 - c1), (1.0 - c0) * c1, c0 * c1});
        }
    }

    std::uint64_t events = 0;
    if (q > 0.0) {
        std::uniform_real_distribution<double> uniform(0.0, 1.0);
        std::discrete_distribution<std::size_t> pick_cell(event_mass.begin(), event_mass.end());
        const double log_empty = std::log1p(-std::min(q, 1.0));
        std::uint64_t position = 0;
        while (true) {
            // Number of empty windows before the next event, Geometric(q) on {0, 1, ...}.
            if (q < 1.0) {
                const double gap = std::floor(std::log(1.0 - uniform(rng)) / log_empty);
                if (!(gap < static_cast<double>(job.windows - position))) {
                    break;
                }
                position += static_cast<std::uint64_t>(gap);
            }
            if (position >= job.windows) {
                break;
            }
            const std::size_t i = k == 1 ? 0 : pick_cell(rng);
            static constexpr std::array<WindowOutcome, 3> outcomes{WindowOutcome::det0, WindowOutcome::det1,
                                                                   WindowOutcome::both};
            tally(out[mix.cells[i]], mix.cells[i], outcomes[outcome_given_event[i](rng)]);
            ++events;
            ++position;
        }
    }
    multinomial_split(job.windows - events, mix.cells, empty_mass, rng, out);
}

std::vector<Job> plan_jobs(const ProtocolConfig& config) {
    std::vector<Job> jobs;
    const auto add_chunks = [&](std::uint32_t tag) {
        for (std::uint64_t start = 0, chunk = 0; start < config.n_windows; start += chunk_windows, ++chunk) {
            jobs.push_back({tag, chunk, std::min(chunk_windows, config.n_windows - start)});
        }
    };
    if (config.mode == Mode::setting_scan) {
        for (std::uint32_t c = 0; c < cell_count; ++c) {
            add_chunks(c);
        }
    } else {
        add_chunks(random_mode_tag);
    }
    return jobs;
}

}  // namespace

std::string_view to_string(Mode mode) noexcept {
    return mode == Mode::random_bb84 ? "random_bb84" : "setting_scan";
}

std::string_view to_string(Sampling sampling) noexcept {
    return sampling == Sampling::per_window ? "per_window" : "skip_ahead";
}

std::optional<Mode> parse_mode(std::string_view text) noexcept {
    if (text == "random_bb84") return Mode::random_bb84;
    if (text == "setting_scan") return Mode::setting_scan;
    return std::nullopt;
}

std::optional<Sampling> parse_sampling(std::string_view text) noexcept {
    if (text == "per_window") return Sampling::per_window;
    if (text == "skip_ahead") return Sampling::skip_ahead;
    return std::nullopt;
}

void ProtocolConfig::validate() const {
    if (n_windows < 1) {
        throw DomainError("n_windows must be >= 1");
    }
    if (worker_streams < 1) {
        throw DomainError("worker_streams must be >= 1");
    }
}

std::uint64_t ProtocolConfig::total_windows() const noexcept {
    return mode == Mode::setting_scan ? n_windows * cell_count : n_windows;
}

std::string_view state_name(std::size_t alice_index) noexcept {
    static constexpr std::array<std::string_view, 4> names{"V", "H", "L", "R"};
    return alice_index < names.size() ? names[alice_index] : "?";
}

CellCounts& CellCounts::operator+=(const CellCounts& other) noexcept {
    correct += other.correct;
    wrong += other.wrong;
    double_clicks += other.double_clicks;
    empty_windows += other.empty_windows;
    return *this;
}

std::uint64_t RunCounts::windows() const noexcept {
    std::uint64_t n = 0;
    for (const auto& c : cells) {
        n += c.windows();
    }
    return n;
}

std::uint64_t RunCounts::double_clicks() const noexcept {
    std::uint64_t n = 0;
    for (const auto& c : cells) {
        n += c.double_clicks;
    }
    return n;
}

RunCounts& RunCounts::operator+=(const RunCounts& other) noexcept {
    for (std::size_t i = 0; i < cell_count; ++i) {
        cells[i] += other.cells[i];
    }
    return *this;
}

void LinkParams::validate() const {
    optics.validate();
    source.validate();
    detector.validate();
}

std::array<CellModel, cell_count> cell_models(const LinkParams& link) {
    link.validate();
    const double mean_at_bob =
        link.source.mean_photons_per_window * link.transmittance.value() * link.optics.bob_transmission;
    std::array<CellModel, cell_count> models{};
    for (std::size_t c = 0; c < cell_count; ++c) {
        const auto alice = cell_alice_state(c);
        const auto state =
            optics::encode(alice.bit, alice.basis, link.optics.extinction_ratio).rotated(link.optics.misalignment_deg);
        const auto [p0, p1] = optics::pbs_probabilities(state, cell_bob_basis(c));
        models[c] = {detector::click_probability(mean_at_bob * p0, link.detector),
                     detector::click_probability(mean_at_bob * p1, link.detector)};
    }
    return models;
}

RunCounts run(const ProtocolConfig& config, const LinkParams& link) {
    config.validate();
    const auto models = cell_models(link);
    const auto jobs = plan_jobs(config);
    std::vector<CellTallies> results(jobs.size());

    std::atomic<std::size_t> next{0};
    const auto worker = [&] {
        for (std::size_t j = next++; j < jobs.size(); j = next++) {
            Rng rng = make_stream(config.seed, jobs[j].tag, jobs[j].chunk);
            if (config.sampling == Sampling::per_window) {
                simulate_per_window(jobs[j], models, rng, results[j]);
            } else {
                simulate_skip_ahead(jobs[j], models, rng, results[j]);
            }
        }
    };

    const auto threads = std::min<std::size_t>(config.worker_streams, jobs.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) {
            pool.emplace_back(worker);
        }
    }

    RunCounts total;
    for (const auto& r : results) {
        for (std::size_t c = 0; c < cell_count; ++c) {
            total.cells[c] += r[c];
        }
    }
    return total;
}

SiftedCounts sift(const RunCounts& counts) noexcept {
    SiftedCounts s;
    for (std::size_t c = 0; c < cell_count; ++c) {
        if (cell_is_sifted(c)) {
            s.correct += counts.cells[c].correct;
            s.wrong += counts.cells[c].wrong;
        }
    }
    return s;
}

std::optional<QberEstimate> qber(std::uint64_t correct, std::uint64_t wrong) noexcept {
    const std::uint64_t n = correct + wrong;
    if (n == 0) {
        return std::nullopt;
    }
    const double q = static_cast<double>(wrong) / static_cast<double>(n);
    return QberEstimate{q, std::sqrt(q * (1.0 - q) / static_cast<double>(n)), n};
}

}  // namespace qkdlink::protocol
