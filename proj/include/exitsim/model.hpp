#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "exitsim/error.hpp"
#include "exitsim/numeric.hpp"

namespace exitsim {

/// Diffusion scales of the two-Brownian-motion model.
///
/// `sigma1` drives the hidden noise w, `sigma` the observed path b. Derived
/// constants are recomputed on every access.
class ModelParams {
public:
    ModelParams() = default;

    double sigma1() const { return sigma1_; }
    double sigma() const { return sigma_; }
    /// Total diffusion a = sigma1^2 + sigma^2.
    double a() const { return sigma1_ * sigma1_ + sigma_ * sigma_; }
    /// Ratio sigma1 / sigma (infinite for the decoupled model).
    double eps() const {
        return sigma_ > 0.0 ? sigma1_ / sigma_ : std::numeric_limits<double>::infinity();
    }
    /// Stochastic parabolicity margin 2a - sigma^2.
    double gap() const { return 2.0 * a() - sigma_ * sigma_; }

    bool decoupled() const { return sigma_ == 0.0; }

    /// Model with sigma = 0: the density no longer feels b.
    static ModelParams decoupled(double sigma1);

    friend ModelParams derive_constants(double sigma1, double sigma);

    friend bool operator==(const ModelParams&, const ModelParams&) = default;

private:
    ModelParams(double sigma1, double sigma) : sigma1_(sigma1), sigma_(sigma) {}

    double sigma1_ = 1.0;
    double sigma_ = 1.0;
};

inline ModelParams derive_constants(double sigma1, double sigma) {
    if (!std::isfinite(sigma1) || !std::isfinite(sigma) || sigma1 <= 0.0 || sigma <= 0.0) {
        throw ParameterError("sigma1 and sigma must be finite and positive");
    }
    return ModelParams(sigma1, sigma);
}

inline ModelParams ModelParams::decoupled(double sigma1) {
    if (!std::isfinite(sigma1) || sigma1 <= 0.0) {
        throw ParameterError("sigma1 must be finite and positive");
    }
    return ModelParams(sigma1, 0.0);
}

inline void to_json(nlohmann::json& j, const ModelParams& p) {
    j = nlohmann::json{{"sigma1", p.sigma1()}, {"sigma", p.sigma()}};
}

inline void from_json(const nlohmann::json& j, ModelParams& p) {
    const double s1 = j.at("sigma1").get<double>();
    const double s = j.at("sigma").get<double>();
    p = s == 0.0 ? ModelParams::decoupled(s1) : derive_constants(s1, s);
}

/// Scaled standard bump x -> amplitude * exp(-1 / (1 - ((x - center) / radius)^2)).
///
/// Smooth with compact support [center - radius, center + radius]; used both
/// for the initial density and for weak-form test functions.
class Bump {
public:
    Bump() = default;
    Bump(double center, double radius, double amplitude = 1.0)
        : center_(center), radius_(radius), amplitude_(amplitude) {
        if (!(radius > 0.0) || !std::isfinite(center) || !std::isfinite(amplitude)) {
            throw ParameterError("bump needs a finite center and a positive radius");
        }
    }

    double center() const { return center_; }
    double radius() const { return radius_; }
    double amplitude() const { return amplitude_; }
    double support_lo() const { return center_ - radius_; }
    double support_hi() const { return center_ + radius_; }

    double operator()(double x) const {
        const double u = (x - center_) / radius_;
        const double q = 1.0 - u * u;
        if (q <= 0.0) return 0.0;
        return amplitude_ * std::exp(-1.0 / q);
    }

    double derivative(double x) const {
        const double u = (x - center_) / radius_;
        const double q = 1.0 - u * u;
        if (q <= 0.0) return 0.0;
        return amplitude_ * std::exp(-1.0 / q) * (-2.0 * u / (q * q)) / radius_;
    }

    double second_derivative(double x) const {
        const double u = (x - center_) / radius_;
        const double q = 1.0 - u * u;
        if (q <= 0.0) return 0.0;
        const double g1 = -2.0 * u / (q * q);
        const double g2 = -2.0 * (1.0 + 3.0 * u * u) / (q * q * q);
        return amplitude_ * std::exp(-1.0 / q) * (g1 * g1 + g2) / (radius_ * radius_);
    }

    /// Largest value, attained at the center.
    double peak() const { return amplitude_ * std::exp(-1.0); }

    Bump scaled(double factor) const { return Bump(center_, radius_, amplitude_ * factor); }

private:
    double center_ = 0.5;
    double radius_ = 0.25;
    double amplitude_ = 1.0;
};

/// Normalized bump density on (0, 1); the canonical initial density.
class InitialDensity {
public:
    InitialDensity() : InitialDensity(0.5, 0.25) {}

    InitialDensity(double center, double radius) {
        if (!(radius > 0.0) || !(center - radius > 0.0) || !(center + radius < 1.0)) {
            throw ParameterError("bump support must lie inside (0, 1)");
        }
        const Bump unit(center, radius);
        const double mass = adaptive_integrate(unit, center - radius, center + radius, 1e-13, 12);
        bump_ = unit.scaled(1.0 / mass);
    }

    double operator()(double x) const { return bump_(x); }
    double derivative(double x) const { return bump_.derivative(x); }
    double second_derivative(double x) const { return bump_.second_derivative(x); }

    const Bump& bump() const { return bump_; }
    double center() const { return bump_.center(); }
    double radius() const { return bump_.radius(); }
    double normalization() const { return bump_.amplitude(); }
    double peak() const { return bump_.peak(); }

private:
    Bump bump_;
};

inline InitialDensity bump_density(double center, double radius) {
    return InitialDensity(center, radius);
}

// ---------------------------------------------------------------------------
// Run configuration

/// Flat run configuration. Every key can be set from a config file and
/// overridden by a command-line flag of the same name.
struct RunConfig {
    // model
    double sigma1 = 0.5;
    double sigma = 1.0;
    double bump_center = 0.5;
    double bump_radius = 0.25;
    // grids
    int space_level = 9;
    int time_level = 16;
    double horizon = 0.25;
    std::string scheme = "comoving";
    // randomness
    std::uint64_t seed = 1;
    int b_seeds = 1;
    // Monte Carlo sizes
    long long particles = 100000;
    long long frontier_replicas = 100000;
    long long range_replicas = 20000;
    long long gamma_replicas = 20000;
    long long lemma_seeds = 10000;
    long long control_replicas = 1000000;
    // tolerances
    double clamp_tolerance = 1e-6;
    // diagnostics
    int grid_points = 33;
    int t0_count = 32;
    double t0_first = 0.125;
    double t0_last = 0.84375;
    int n_min_log2 = 4;
    int n_max_log2 = 10;
    double boundary_time = 0.5;
    int offset_min_log2 = 4;
    int offset_max_log2 = 9;
    // bounds
    double c = 40.0;
    double d = 1.0;
    double delta = 1.0;
    double mu = 0.0;
    double alpha = 0.3;
    double gamma_ratio = 0.5;
    double beta_factor = 8.0;
    int lemma_k = 60;

    double dx() const { return std::ldexp(1.0, -space_level); }
    double dt() const { return std::ldexp(horizon, -time_level); }

    /// Model parameters; sigma == 0 yields the decoupled model.
    ModelParams model() const {
        return sigma == 0.0 ? ModelParams::decoupled(sigma1) : derive_constants(sigma1, sigma);
    }
    InitialDensity initial_density() const { return bump_density(bump_center, bump_radius); }

    void validate() const {
        if (!(horizon > 0.0)) throw ParameterError("horizon must be positive");
        if (space_level < 4 || time_level < 4) throw ParameterError("grid levels must be >= 4");
        if (space_level > 20 || time_level > 30) throw ResourceError("grid level too deep");
        if (b_seeds < 1 || particles < 1 || frontier_replicas < 1 || range_replicas < 1 ||
            gamma_replicas < 1 || lemma_seeds < 1 || control_replicas < 1) {
            throw ParameterError("replica counts must be >= 1");
        }
        if (scheme != "comoving" && scheme != "fixed_frame") {
            throw ParameterError("scheme must be 'comoving' or 'fixed_frame'");
        }
        (void)model();
        (void)initial_density();
    }
};

namespace detail {

struct ConfigKey {
    const char* name;
    const char* doc;
    std::function<void(RunConfig&, const nlohmann::json&)> set;
    std::function<nlohmann::json(const RunConfig&)> get;
};

template <class T>
ConfigKey make_key(const char* name, const char* doc, T RunConfig::*member) {
    return ConfigKey{
        name, doc,
        [member, name](RunConfig& c, const nlohmann::json& v) {
            try {
                c.*member = v.get<T>();
            } catch (const nlohmann::json::exception&) {
                throw UsageError(std::string("config key '") + name + "' has the wrong type");
            }
        },
        [member](const RunConfig& c) { return nlohmann::json(c.*member); }};
}

}  // namespace detail

/// Documented configuration keys, in canonical order.
inline const std::vector<detail::ConfigKey>& config_keys() {
    using detail::make_key;
    static const std::vector<detail::ConfigKey> keys = {
        make_key("sigma1", "diffusion of the hidden noise w", &RunConfig::sigma1),
        make_key("sigma", "diffusion of the observation b (0 decouples)", &RunConfig::sigma),
        make_key("bump_center", "center of the initial bump density", &RunConfig::bump_center),
        make_key("bump_radius", "radius of the initial bump density", &RunConfig::bump_radius),
        make_key("space_level", "spatial grid has 2^level + 1 nodes", &RunConfig::space_level),
        make_key("time_level", "path grid has 2^level + 1 nodes on [0, horizon]",
                 &RunConfig::time_level),
        make_key("horizon", "final time T", &RunConfig::horizon),
        make_key("scheme", "density solver scheme: comoving | fixed_frame", &RunConfig::scheme),
        make_key("seed", "master seed", &RunConfig::seed),
        make_key("b_seeds", "number of observation paths", &RunConfig::b_seeds),
        make_key("particles", "particle ensemble size", &RunConfig::particles),
        make_key("frontier_replicas", "replicas per frontier evaluation point",
                 &RunConfig::frontier_replicas),
        make_key("range_replicas", "replicas for the range probability", &RunConfig::range_replicas),
        make_key("gamma_replicas", "replicas for the first-passage probability",
                 &RunConfig::gamma_replicas),
        make_key("lemma_seeds", "independent seeds for the geometric-time check",
                 &RunConfig::lemma_seeds),
        make_key("control_replicas", "replicas per point in the sigma = 0 boundary control",
                 &RunConfig::control_replicas),
        make_key("clamp_tolerance", "largest admissible clamped mass", &RunConfig::clamp_tolerance),
        make_key("grid_points", "points of the comparison x grid", &RunConfig::grid_points),
        make_key("t0_count", "base times in the increment study", &RunConfig::t0_count),
        make_key("t0_first", "first base time", &RunConfig::t0_first),
        make_key("t0_last", "last base time", &RunConfig::t0_last),
        make_key("n_min_log2", "smallest window 1/n has n = 2^value", &RunConfig::n_min_log2),
        make_key("n_max_log2", "largest n = 2^value", &RunConfig::n_max_log2),
        make_key("boundary_time", "time of the boundary ratio study", &RunConfig::boundary_time),
        make_key("offset_min_log2", "largest offset is 2^-value", &RunConfig::offset_min_log2),
        make_key("offset_max_log2", "smallest offset is 2^-value", &RunConfig::offset_max_log2),
        make_key("c", "range constant c", &RunConfig::c),
        make_key("d", "first-passage constant d", &RunConfig::d),
        make_key("delta", "first-passage time cap parameter", &RunConfig::delta),
        make_key("mu", "margin in the divergence exponent", &RunConfig::mu),
        make_key("alpha", "exponent at which r and beta are reported", &RunConfig::alpha),
        make_key("gamma_ratio", "geometric time ratio in (0, 1)", &RunConfig::gamma_ratio),
        make_key("beta_factor", "index growth factor", &RunConfig::beta_factor),
        make_key("lemma_k", "number of geometric levels", &RunConfig::lemma_k),
    };
    return keys;
}

inline const detail::ConfigKey* find_config_key(const std::string& name) {
    for (const auto& k : config_keys()) {
        if (name == k.name) return &k;
    }
    return nullptr;
}

inline void set_config_value(RunConfig& cfg, const std::string& key, const nlohmann::json& value) {
    const auto* k = find_config_key(key);
    if (k == nullptr) throw UsageError("unknown config key '" + key + "'");
    k->set(cfg, value);
}

/// Apply a flat JSON object. One level of tables is allowed and flattened;
/// table names are only for grouping.
inline void apply_config(RunConfig& cfg, const nlohmann::json& doc) {
    if (!doc.is_object()) throw UsageError("config must be a JSON object");
    for (const auto& [key, value] : doc.items()) {
        if (value.is_object()) {
            for (const auto& [inner, v] : value.items()) {
                if (v.is_object()) throw UsageError("config tables may not nest: '" + inner + "'");
                set_config_value(cfg, inner, v);
            }
        } else {
            set_config_value(cfg, key, value);
        }
    }
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in, nullptr, true, /*ignore_comments=*/true);
    } catch (const nlohmann::json::parse_error& e) {
        throw UsageError(std::string("config parse error: ") + e.what());
    }
    RunConfig cfg;
    apply_config(cfg, doc);
    return cfg;
}

inline nlohmann::json config_to_json(const RunConfig& cfg) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& k : config_keys()) j[k.name] = k.get(cfg);
    return j;
}

/// Parse a command-line string for a key, using the key's current type.
inline void set_config_from_string(RunConfig& cfg, const std::string& key, const std::string& text) {
    const auto* k = find_config_key(key);
    if (k == nullptr) throw UsageError("unknown config key '" + key + "'");
    const nlohmann::json current = k->get(cfg);
    nlohmann::json value;
    if (current.is_string()) {
        value = text;
    } else {
        try {
            value = nlohmann::json::parse(text);
        } catch (const nlohmann::json::parse_error&) {
            throw UsageError("bad value '" + text + "' for key '" + key + "'");
        }
        if (!value.is_number()) throw UsageError("key '" + key + "' expects a number");
        if (current.is_number_integer() && !value.is_number_integer()) {
            throw UsageError("key '" + key + "' expects an integer");
        }
    }
    k->set(cfg, value);
}

}  // namespace exitsim
