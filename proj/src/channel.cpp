#include "qkdlink/channel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "qkdlink/errors.hpp"

namespace qkdlink::channel {

namespace {

void require_nonnegative(double value, const char* what) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw DomainError(fmt::format("{} must be finite and >= 0 (got {})", what, value));
    }
}

// clang-format off
const std::array<AtmosphereProfile, 8> builtin_profiles{{
    {Season::summer, Aerosol::urban,  5.0, 2.62e-1, 17.6},
    {Season::summer, Aerosol::urban, 13.0, 9.01e-2, 51.1},
    {Season::summer, Aerosol::rural,  5.0, 4.60e-2, 100.07},
    {Season::summer, Aerosol::rural, 13.0, 1.58e-2, 290.9},
    {Season::winter, Aerosol::urban,  5.0, 2.54e-1, 18.1},
    {Season::winter, Aerosol::urban, 13.0, 8.38e-2, 52.7},
    {Season::winter, Aerosol::rural,  5.0, 4.51e-2, 102.1},
    {Season::winter, Aerosol::rural, 13.0, 1.55e-2, 270.0},
}};
// clang-format on

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

}  // namespace

Transmittance::Transmittance(double value) : value_(value) {
    if (!(value > 0.0 && value <= 1.0)) {
        throw DomainError(fmt::format("transmittance must lie in (0, 1] (got {})", value));
    }
}

Transmittance transmittance(double k_per_km, double length_km) {
    require_nonnegative(k_per_km, "extinction coefficient");
    require_nonnegative(length_km, "path length");
    const double t = std::exp(-k_per_km * length_km);
    if (t == 0.0) {
        throw DomainError(fmt::format("transmittance underflows for k L = {}", k_per_km * length_km));
    }
    return Transmittance(t);
}

double equivalent_path(double k_per_km, Transmittance t) {
    require_nonnegative(k_per_km, "extinction coefficient");
    if (t.value() == 1.0) {
        return 0.0;
    }
    if (k_per_km == 0.0) {
        throw NoSolutionError("no finite path attenuates a transparent medium");
    }
    return -std::log(t.value()) / k_per_km;
}

double loss_db(Transmittance t) { return std::max(0.0, -10.0 * std::log10(t.value())); }

Transmittance from_loss_db(double db) {
    require_nonnegative(db, "loss");
    const double t = std::pow(10.0, -db / 10.0);
    if (t == 0.0) {
        throw DomainError(fmt::format("loss of {} dB underflows", db));
    }
    return Transmittance(t);
}

std::string_view to_string(Season season) noexcept {
    return season == Season::summer ? "summer" : "winter";
}

std::string_view to_string(Aerosol aerosol) noexcept {
    return aerosol == Aerosol::urban ? "urban" : "rural";
}

std::optional<Season> parse_season(std::string_view text) noexcept {
    if (text == "summer") return Season::summer;
    if (text == "winter") return Season::winter;
    return std::nullopt;
}

std::optional<Aerosol> parse_aerosol(std::string_view text) noexcept {
    if (text == "urban") return Aerosol::urban;
    if (text == "rural") return Aerosol::rural;
    return std::nullopt;
}

std::string AtmosphereProfile::name() const {
    return fmt::format("{}-{}-{}km", to_string(season), to_string(aerosol), visibility_km);
}

void AtmosphereProfile::validate() const {
    if (!(visibility_km > 0.0) || !std::isfinite(visibility_km)) {
        throw DomainError("visibility must be > 0");
    }
    if (!(k_per_km > 0.0) || !std::isfinite(k_per_km)) {
        throw DomainError("extinction coefficient must be > 0");
    }
}

std::span<const AtmosphereProfile> profile_table() noexcept { return builtin_profiles; }

std::optional<AtmosphereProfile> find_profile(std::span<const AtmosphereProfile> table, Season season,
                                              Aerosol aerosol, double visibility_km) {
    const auto it = std::find_if(table.begin(), table.end(), [&](const AtmosphereProfile& p) {
        return p.season == season && p.aerosol == aerosol && std::abs(p.visibility_km - visibility_km) <= 1e-9;
    });
    if (it == table.end()) {
        return std::nullopt;
    }
    return *it;
}

std::vector<AtmosphereProfile> read_profiles(std::istream& in) {
    std::vector<AtmosphereProfile> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto content = trim(line);
        if (content.empty() || content.front() == '#') {
            continue;
        }
        auto fields_text = content;
        std::replace(fields_text.begin(), fields_text.end(), ',', ' ');
        std::istringstream fields(fields_text);
        std::string season_text;
        std::string aerosol_text;
        AtmosphereProfile row;
        if (!(fields >> season_text >> aerosol_text >> row.visibility_km >> row.k_per_km)) {
            throw ValidationError("profile", line_no,
                                  fmt::format("line {}: expected 'season, aerosol, visibility_km, k_per_km'", line_no));
        }
        if (std::string extra; fields >> extra) {
            throw ValidationError("profile", line_no, fmt::format("line {}: unexpected trailing field '{}'", line_no, extra));
        }
        const auto season = parse_season(season_text);
        const auto aerosol = parse_aerosol(aerosol_text);
        if (!season) {
            throw ValidationError("season", line_no, fmt::format("line {}: unknown season '{}'", line_no, season_text));
        }
        if (!aerosol) {
            throw ValidationError("aerosol", line_no, fmt::format("line {}: unknown aerosol '{}'", line_no, aerosol_text));
        }
        row.season = *season;
        row.aerosol = *aerosol;
        try {
            row.validate();
        } catch (const DomainError& e) {
            throw ValidationError("profile", line_no, fmt::format("line {}: {}", line_no, e.what()));
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<AtmosphereProfile> load_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("profile_table", 0, fmt::format("cannot open profile table '{}'", path.string()));
    }
    return read_profiles(in);
}

std::string_view to_string(AbsorbanceConvention convention) noexcept {
    return convention == AbsorbanceConvention::decadic ? "decadic" : "natural";
}

std::optional<AbsorbanceConvention> parse_convention(std::string_view text) noexcept {
    if (text == "decadic") return AbsorbanceConvention::decadic;
    if (text == "natural") return AbsorbanceConvention::natural;
    return std::nullopt;
}

void BromineCell::validate() const {
    for (const double v : {molar_absorptivity, pressure_hpa, temperature_k, path_length_m}) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw DomainError("bromine cell parameters must be finite and > 0");
        }
    }
}

double molar_concentration(const BromineCell& cell) {
    cell.validate();
    const double mol_per_m3 = cell.pressure_hpa * 100.0 / (gas_constant * cell.temperature_k);
    return mol_per_m3 / 1000.0;
}

double absorbance(const BromineCell& cell) {
    return cell.molar_absorptivity * molar_concentration(cell) * cell.path_length_m * 100.0;
}

Transmittance bromine_transmittance(const BromineCell& cell, AbsorbanceConvention convention) {
    const double a = absorbance(cell);
    const double t = convention == AbsorbanceConvention::decadic ? std::pow(10.0, -a) : std::exp(-a);
    return Transmittance(std::clamp(t, std::numeric_limits<double>::min(), 1.0));
}

}  // namespace qkdlink::channel
