#include "qkdlink/cli/scenario.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include "qkdlink/errors.hpp"

namespace qkdlink::cli {

namespace {

std::size_t line_of(const YAML::Node& node) { return static_cast<std::size_t>(node.Mark().line + 1); }

[[noreturn]] void fail(const std::string& field, std::size_t line, const std::string& message) {
    if (line == 0) {
        throw ValidationError(field, line, fmt::format("{}: {}", field, message));
    }
    throw ValidationError(field, line, fmt::format("line {}: {}: {}", line, field, message));
}

/// A mapping node whose keys are checked against an allow-list.
class Section {
  public:
    Section(YAML::Node node, std::string path, std::size_t parent_line, std::set<std::string> allowed)
        : node_(std::move(node)), path_(std::move(path)) {
        if (!node_ || node_.IsNull()) {
            fail(path_, parent_line, "missing section");
        }
        if (!node_.IsMap()) {
            fail(path_, line_of(node_), "expected a mapping");
        }
        for (const auto& kv : node_) {
            const auto key = kv.first.as<std::string>();
            if (!allowed.contains(key)) {
                fail(path_ + "." + key, line_of(kv.first), "unknown field");
            }
        }
    }

    const std::string& path() const { return path_; }
    std::size_t line() const { return line_of(node_); }
    bool has(const char* key) const { return static_cast<bool>(node_[key]); }
    YAML::Node child(const char* key) const { return node_[key]; }
    std::string field(const char* key) const { return path_ + "." + key; }

    double number(const char* key) const {
        const auto n = require(key);
        try {
            const double v = n.as<double>();
            if (!std::isfinite(v)) {
                fail(field(key), line_of(n), "must be finite");
            }
            return v;
        } catch (const YAML::BadConversion&) {
            fail(field(key), line_of(n), fmt::format("expected a number, got '{}'", n.Scalar()));
        }
    }

    /// number() that must satisfy `ok`; `requirement` completes "must ...".
    template <class Pred>
    double number(const char* key, Pred ok, const char* requirement) const {
        const double v = number(key);
        if (!ok(v)) {
            fail(field(key), line_of(node_[key]), fmt::format("invariant violated: must {} (got {})", requirement, v));
        }
        return v;
    }

    double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::uint64_t count(const char* key) const {
        const auto n = require(key);
        try {
            return n.as<std::uint64_t>();
        } catch (const YAML::BadConversion&) {
        }
        // Accept integral values written in exponent notation, e.g. 1e7.
        double v = 0.0;
        try {
            v = n.as<double>();
        } catch (const YAML::BadConversion&) {
            fail(field(key), line_of(n), fmt::format("expected a non-negative integer, got '{}'", n.Scalar()));
        }
        if (!(v >= 0.0 && v <= 1.8e19 && std::floor(v) == v)) {
            fail(field(key), line_of(n), fmt::format("expected a non-negative integer, got '{}'", n.Scalar()));
        }
        return static_cast<std::uint64_t>(v);
    }

    std::string text(const char* key) const {
        const auto n = require(key);
        if (!n.IsScalar()) {
            fail(field(key), line_of(n), "expected a scalar");
        }
        return n.Scalar();
    }

  private:
    YAML::Node require(const char* key) const {
        const auto n = node_[key];
        if (!n) {
            fail(field(key), line(), "missing field");
        }
        return n;
    }

    YAML::Node node_;
    std::string path_;
};

constexpr auto positive = [](double v) { return v > 0.0; };
constexpr auto nonnegative = [](double v) { return v >= 0.0; };

template <class Fn>
void check_section(const std::string& path, std::size_t line, Fn&& fn) {
    try {
        fn();
    } catch (const DomainError& e) {
        fail(path, line, fmt::format("invariant violated: {}", e.what()));
    } catch (const NoSolutionError& e) {
        fail(path, line, fmt::format("invariant violated: {}", e.what()));
    }
}

budget::TransmittanceSource read_channel(const Section& channel,
                                         std::span<const channel::AtmosphereProfile> user_profiles) {
    const int variants = (channel.has("transmittance") ? 1 : 0) + (channel.has("profile") ? 1 : 0) +
                         (channel.has("bromine") ? 1 : 0);
    if (variants != 1) {
        fail(channel.path(), channel.line(), "exactly one of transmittance, profile, bromine is required");
    }
    if (channel.has("transmittance")) {
        return budget::ExplicitTransmittance{
            channel.number("transmittance", [](double t) { return t > 0.0 && t <= 1.0; }, "lie in (0, 1]")};
    }
    if (channel.has("profile")) {
        const Section p(channel.child("profile"), channel.field("profile"), channel.line(),
                        {"season", "aerosol", "visibility_km", "length_km"});
        const auto season = channel::parse_season(p.text("season"));
        if (!season) {
            fail(p.field("season"), p.line(), "expected summer or winter");
        }
        const auto aerosol = channel::parse_aerosol(p.text("aerosol"));
        if (!aerosol) {
            fail(p.field("aerosol"), p.line(), "expected urban or rural");
        }
        const double visibility = p.number("visibility_km");
        auto profile = channel::find_profile(user_profiles, *season, *aerosol, visibility);
        if (!profile) {
            profile = channel::find_profile(channel::profile_table(), *season, *aerosol, visibility);
        }
        if (!profile) {
            fail(p.path(), p.line(),
                 fmt::format("no {}/{}/{} km profile in the built-in or user table", channel::to_string(*season),
                             channel::to_string(*aerosol), visibility));
        }
        return budget::ProfilePath{*profile, p.number("length_km", nonnegative, "be >= 0")};
    }
    const Section b(channel.child("bromine"), channel.field("bromine"), channel.line(),
                    {"pressure_hpa", "temperature_k", "path_m", "epsilon", "convention"});
    budget::BromineFill fill;
    fill.cell.pressure_hpa = b.number("pressure_hpa", positive, "be > 0");
    fill.cell.temperature_k = b.number("temperature_k", positive, "be > 0");
    fill.cell.path_length_m = b.number("path_m", positive, "be > 0");
    fill.cell.molar_absorptivity = b.number("epsilon", positive, "be > 0");
    if (b.has("convention")) {
        const auto c = channel::parse_convention(b.text("convention"));
        if (!c) {
            fail(b.field("convention"), b.line(), "expected decadic or natural");
        }
        fill.convention = *c;
    }
    return fill;
}

std::string num(double v) { return fmt::format("{}", v); }

}  // namespace

std::vector<channel::AtmosphereProfile> user_profiles_from_env() {
    const char* path = std::getenv(profile_table_env);
    if (path == nullptr || *path == '\0') {
        return {};
    }
    return channel::load_profiles(path);
}

ScenarioFile parse_scenario(std::string_view text, std::span<const channel::AtmosphereProfile> user_profiles) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(text));
    } catch (const YAML::ParserException& e) {
        fail("document", static_cast<std::size_t>(e.mark.line + 1), e.msg);
    }
    const Section top(root, "scenario", 1,
                      {"name", "description", "source", "optics", "channel", "detector", "protocol", "thresholds",
                       "reference"});

    ScenarioFile file;
    auto& s = file.scenario;
    s.name = top.has("name") ? top.text("name") : "custom";
    s.description = top.has("description") ? top.text("description") : "";

    const Section source(top.child("source"), "source", top.line(), {"wavelength_nm", "mean_photons_per_window"});
    s.source.wavelength_nm = source.number("wavelength_nm", positive, "be > 0");
    s.source.mean_photons_per_window = source.number("mean_photons_per_window", nonnegative, "be >= 0");
    check_section("source", source.line(), [&] { s.source.validate(); });

    const Section optics(top.child("optics"), "optics", top.line(),
                         {"extinction_ratio", "misalignment_deg", "bob_transmission"});
    s.optics.extinction_ratio = optics.number("extinction_ratio", [](double r) { return r > 1.0; }, "be > 1");
    s.optics.misalignment_deg = optics.number("misalignment_deg");
    s.optics.bob_transmission = optics.has("bob_transmission")
                                     ? optics.number("bob_transmission", [](double t) { return t > 0.0 && t <= 1.0; },
                                                     "lie in (0, 1]")
                                     : 1.0;
    check_section("optics", optics.line(), [&] { s.optics.validate(); });

    const Section channel(top.child("channel"), "channel", top.line(), {"transmittance", "profile", "bromine"});
    s.channel = read_channel(channel, user_profiles);
    check_section("channel", channel.line(), [&] { (void)s.transmittance(); });

    const Section detector(top.child("detector"), "detector", top.line(),
                           {"quantum_efficiency", "dead_time_ns", "dark_rate_hz"});
    s.detector.quantum_efficiency = detector.number(
        "quantum_efficiency", [](double e) { return e > 0.0 && e <= 1.0; }, "lie in (0, 1]");
    s.detector.dead_time_ns = detector.number("dead_time_ns", positive, "be > 0");
    s.detector.dark_rate_hz = detector.number("dark_rate_hz", nonnegative, "be >= 0");
    check_section("detector", detector.line(), [&] { s.detector.validate(); });

    const Section protocol(top.child("protocol"), "protocol", top.line(),
                           {"mode", "n_windows", "seed", "worker_streams", "sampling"});
    const auto mode = protocol::parse_mode(protocol.text("mode"));
    if (!mode) {
        fail(protocol.field("mode"), protocol.line(), "expected random_bb84 or setting_scan");
    }
    file.protocol.mode = *mode;
    file.protocol.n_windows = protocol.count("n_windows");
    if (file.protocol.n_windows < 1) {
        fail(protocol.field("n_windows"), line_of(protocol.child("n_windows")), "invariant violated: must be >= 1");
    }
    file.protocol.seed = protocol.count("seed");
    const auto workers = protocol.count("worker_streams");
    if (workers < 1 || workers > 4096) {
        fail(protocol.field("worker_streams"), protocol.line(), "invariant violated: must lie in [1, 4096]");
    }
    file.protocol.worker_streams = static_cast<unsigned>(workers);
    if (protocol.has("sampling")) {
        const auto sampling = protocol::parse_sampling(protocol.text("sampling"));
        if (!sampling) {
            fail(protocol.field("sampling"), protocol.line(), "expected per_window or skip_ahead");
        }
        file.protocol.sampling = *sampling;
    }
    check_section("protocol", protocol.line(), [&] { file.protocol.validate(); });

    if (top.has("thresholds")) {
        const Section t(top.child("thresholds"), "thresholds", top.line(), {"max_qber", "max_loss_db"});
        file.thresholds.max_qber = t.number_or("max_qber", file.thresholds.max_qber);
        file.thresholds.max_loss_db = t.number_or("max_loss_db", file.thresholds.max_loss_db);
    }
    if (top.has("reference")) {
        const Section r(top.child("reference"), "reference", top.line(), {"qber", "loss_db"});
        if (r.has("qber")) s.reference_qber = r.number("qber");
        if (r.has("loss_db")) s.reference_loss_db = r.number("loss_db");
    }
    return file;
}

ScenarioFile load_scenario(const std::filesystem::path& path,
                           std::span<const channel::AtmosphereProfile> user_profiles) {
    std::ifstream in(path);
    if (!in) {
        throw ValidationError("scenario", 0, fmt::format("cannot open scenario file '{}'", path.string()));
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str(), user_profiles);
}

void validate(const ScenarioFile& file) {
    check_section("protocol", 0, [&] { file.protocol.validate(); });
    check_section("scenario", 0, [&] { (void)file.scenario.link(); });
}

std::string to_yaml(const ScenarioFile& file) {
    const auto& s = file.scenario;
    YAML::Emitter out;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << s.name;
    if (!s.description.empty()) {
        out << YAML::Key << "description" << YAML::Value << s.description;
    }
    const auto number = [&](const char* key, double v) { out << YAML::Key << key << YAML::Value << num(v); };

    out << YAML::Key << "source" << YAML::Value << YAML::BeginMap;
    number("wavelength_nm", s.source.wavelength_nm);
    number("mean_photons_per_window", s.source.mean_photons_per_window);
    out << YAML::EndMap;

    out << YAML::Key << "optics" << YAML::Value << YAML::BeginMap;
    number("extinction_ratio", s.optics.extinction_ratio);
    number("misalignment_deg", s.optics.misalignment_deg);
    number("bob_transmission", s.optics.bob_transmission);
    out << YAML::EndMap;

    out << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
    if (const auto* t = std::get_if<budget::ExplicitTransmittance>(&s.channel)) {
        number("transmittance", t->value);
    } else if (const auto* p = std::get_if<budget::ProfilePath>(&s.channel)) {
        out << YAML::Key << "profile" << YAML::Value << YAML::BeginMap;
        out << YAML::Key << "season" << YAML::Value << std::string(channel::to_string(p->profile.season));
        out << YAML::Key << "aerosol" << YAML::Value << std::string(channel::to_string(p->profile.aerosol));
        number("visibility_km", p->profile.visibility_km);
        number("length_km", p->length_km);
        out << YAML::EndMap;
    } else {
        const auto& b = std::get<budget::BromineFill>(s.channel);
        out << YAML::Key << "bromine" << YAML::Value << YAML::BeginMap;
        number("pressure_hpa", b.cell.pressure_hpa);
        number("temperature_k", b.cell.temperature_k);
        number("path_m", b.cell.path_length_m);
        number("epsilon", b.cell.molar_absorptivity);
        out << YAML::Key << "convention" << YAML::Value << std::string(channel::to_string(b.convention));
        out << YAML::EndMap;
    }
    out << YAML::EndMap;

    out << YAML::Key << "detector" << YAML::Value << YAML::BeginMap;
    number("quantum_efficiency", s.detector.quantum_efficiency);
    number("dead_time_ns", s.detector.dead_time_ns);
    number("dark_rate_hz", s.detector.dark_rate_hz);
    out << YAML::EndMap;

    out << YAML::Key << "protocol" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "mode" << YAML::Value << std::string(protocol::to_string(file.protocol.mode));
    out << YAML::Key << "n_windows" << YAML::Value << file.protocol.n_windows;
    out << YAML::Key << "seed" << YAML::Value << file.protocol.seed;
    out << YAML::Key << "worker_streams" << YAML::Value << file.protocol.worker_streams;
    out << YAML::Key << "sampling" << YAML::Value << std::string(protocol::to_string(file.protocol.sampling));
    out << YAML::EndMap;

    out << YAML::Key << "thresholds" << YAML::Value << YAML::BeginMap;
    number("max_qber", file.thresholds.max_qber);
    number("max_loss_db", file.thresholds.max_loss_db);
    out << YAML::EndMap;

    if (s.reference_qber || s.reference_loss_db) {
        out << YAML::Key << "reference" << YAML::Value << YAML::BeginMap;
        if (s.reference_qber) number("qber", *s.reference_qber);
        if (s.reference_loss_db) number("loss_db", *s.reference_loss_db);
        out << YAML::EndMap;
    }
    out << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

ScenarioFile preset_scenario(const budget::LinkScenario& preset) {
    ScenarioFile file;
    file.scenario = preset;
    file.protocol.mode = protocol::Mode::setting_scan;
    file.protocol.n_windows = 10'000'000;
    file.protocol.seed = 1;
    file.protocol.worker_streams = 1;
    file.protocol.sampling = protocol::Sampling::skip_ahead;
    return file;
}

}  // namespace qkdlink::cli
