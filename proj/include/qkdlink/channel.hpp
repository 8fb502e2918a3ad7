#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qkdlink::channel {

/// Fraction of optical power surviving the channel, P/P0 in (0, 1].
class Transmittance {
  public:
    /// Throws DomainError outside (0, 1].
    explicit Transmittance(double value);

    double value() const noexcept { return value_; }

    friend bool operator==(Transmittance, Transmittance) = default;

  private:
    double value_;
};

/// Ratio the bromine cell was measured at.
inline constexpr double measured_bromine_transmittance = 0.01;

/// exp(-k L). Throws DomainError for negative or non-finite inputs.
Transmittance transmittance(double k_per_km, double length_km);

/// Length of a homogeneous path with extinction `k_per_km` producing `t`.
/// k == 0 with t < 1 has no finite answer and throws NoSolutionError.
double equivalent_path(double k_per_km, Transmittance t);

/// -10 log10(t), always >= 0.
double loss_db(Transmittance t);

/// Inverse of loss_db. Throws DomainError for negative loss or a result that underflows.
Transmittance from_loss_db(double db);

enum class Season { summer, winter };
enum class Aerosol { urban, rural };

std::string_view to_string(Season season) noexcept;
std::string_view to_string(Aerosol aerosol) noexcept;
std::optional<Season> parse_season(std::string_view text) noexcept;
std::optional<Aerosol> parse_aerosol(std::string_view text) noexcept;

struct AtmosphereProfile {
    Season season = Season::summer;
    Aerosol aerosol = Aerosol::urban;
    double visibility_km = 0.0;
    double k_per_km = 0.0;  ///< extinction at 632.8 nm
    /// Equivalent path printed alongside the built-in rows; empty for user rows.
    std::optional<double> reference_length_km;

    /// e.g. "summer-urban-5km"
    std::string name() const;
    void validate() const;
};

/// The eight built-in rows.
std::span<const AtmosphereProfile> profile_table() noexcept;

/// Visibility is matched to within 1e-9 km.
std::optional<AtmosphereProfile> find_profile(std::span<const AtmosphereProfile> table, Season season,
                                              Aerosol aerosol, double visibility_km);

/// Reads rows of `season, aerosol, visibility_km, k_per_km` separated by commas and/or whitespace.
/// Blank lines and lines starting with '#' are skipped. Throws ValidationError with the line number.
std::vector<AtmosphereProfile> read_profiles(std::istream& in);
std::vector<AtmosphereProfile> load_profiles(const std::filesystem::path& path);

enum class AbsorbanceConvention { decadic, natural };

std::string_view to_string(AbsorbanceConvention convention) noexcept;
std::optional<AbsorbanceConvention> parse_convention(std::string_view text) noexcept;

/// Multipass gas cell filled with bromine vapour.
struct BromineCell {
    double molar_absorptivity = 1.3;  ///< cm^-1 (mol/L)^-1
    double pressure_hpa = 26.0;
    double temperature_k = 293.0;
    double path_length_m = 22.4;

    void validate() const;
};

inline constexpr double gas_constant = 8.314462618;  // J / (mol K)

/// Ideal-gas molar concentration in mol/L.
double molar_concentration(const BromineCell& cell);

/// epsilon * c * l with l in cm.
double absorbance(const BromineCell& cell);

/// 10^-A (decadic) or e^-A (natural), clamped into (0, 1].
Transmittance bromine_transmittance(const BromineCell& cell,
                                    AbsorbanceConvention convention = AbsorbanceConvention::decadic);

}  // namespace qkdlink::channel
