#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stochlab/jet.hpp"
#include "stochlab/rotor.hpp"
#include "stochlab/sde.hpp"

namespace stochlab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ModelKind { Jet, Rotor };

struct EnsembleConfig {
    std::size_t n_paths = 200;
    double epsilon1 = 1.0;        // exceedance level of the stability-in-probability event
    double threshold = 0.05;      // convergence surrogate threshold
    double tail_fraction = 0.2;   // trailing window fraction
    std::size_t checkpoints = 50;
    double norm_ceiling = 1e3;
    unsigned threads = 0;
};

struct OutputConfig {
    std::string csv;
    std::string svg;
    std::string json;
};

/// One configuration document drives every subcommand; command-line flags
/// override individual fields.
struct RunConfig {
    ModelKind model = ModelKind::Jet;
    JetParams jet;
    RotorParams rotor;
    IntegratorConfig integrator{1e-3, 50.0, SdeScheme::EulerMaruyama, 12345};
    bool seed_from_config = false;  // true when the document carried a seed
    std::optional<Eigen::VectorXd> x0;
    EnsembleConfig ensemble;
    OutputConfig outputs;
    std::vector<std::string> panels;

    Eigen::VectorXd x0_or_default() const {
        if (x0) {
            const Eigen::Index want = model == ModelKind::Jet ? jet_dim : rotor_dim;
            if (x0->size() != want)
                throw ConfigError("x0 has " + std::to_string(x0->size()) + " entries, expected " +
                                  std::to_string(want));
            return *x0;
        }
        return model == ModelKind::Jet ? jet_default_x0() : rotor_default_x0();
    }

    void set_sigma_scalar(double s) {
        jet.sigma = Eigen::RowVectorXd::Constant(1, s);
        rotor.sigma = Eigen::RowVectorXd::Constant(1, s);
    }

    void set_eps(double e) {
        if (model == ModelKind::Jet)
            jet.eps = e;
        else
            rotor.eps = e;
    }
};

inline ModelKind parse_model_kind(const std::string& s) {
    if (s == "jet") return ModelKind::Jet;
    if (s == "rotor") return ModelKind::Rotor;
    throw ConfigError("unknown model '" + s + "' (expected jet or rotor)");
}

inline SdeScheme parse_scheme(const std::string& s) {
    if (s == "euler-maruyama" || s == "em") return SdeScheme::EulerMaruyama;
    if (s == "milstein") return SdeScheme::Milstein;
    throw ConfigError("unknown scheme '" + s + "'");
}

inline MomentumFix parse_momentum_fix(const std::string& s) {
    if (s == "corrected") return MomentumFix::Corrected;
    if (s == "as-printed") return MomentumFix::AsPrinted;
    throw ConfigError("unknown momentum-fix '" + s + "' (expected corrected or as-printed)");
}

inline HMode parse_h_mode(const std::string& s) {
    if (s == "constant-eps") return HMode::ConstantEps;
    if (s == "jet-style") return HMode::JetStyle;
    throw ConfigError("unknown h-mode '" + s + "' (expected constant-eps or jet-style)");
}

namespace detail {

inline Eigen::RowVectorXd json_sigma(const nlohmann::json& j) {
    if (j.is_number()) return Eigen::RowVectorXd::Constant(1, j.get<double>());
    if (j.is_array()) {
        Eigen::RowVectorXd s(j.size());
        for (std::size_t i = 0; i < j.size(); ++i) s[static_cast<Eigen::Index>(i)] = j[i].get<double>();
        return s;
    }
    throw ConfigError("sigma must be a number or an array of numbers");
}

}  // namespace detail

/// Parse the single JSON configuration document.
inline RunConfig load_config_json(const nlohmann::json& doc) {
    RunConfig cfg;
    try {
        if (doc.contains("model")) cfg.model = parse_model_kind(doc["model"].get<std::string>());
        if (doc.contains("params")) {
            const auto& p = doc["params"];
            if (p.contains("A1")) { cfg.jet.A1 = p["A1"].get<double>(); cfg.rotor.A1 = cfg.jet.A1; }
            if (p.contains("A2")) { cfg.jet.A2 = p["A2"].get<double>(); cfg.rotor.A2 = cfg.jet.A2; }
            if (p.contains("A3")) { cfg.jet.A3 = p["A3"].get<double>(); cfg.rotor.A3 = cfg.jet.A3; }
            if (p.contains("I1")) cfg.rotor.I1 = p["I1"].get<double>();
            if (p.contains("I2")) cfg.rotor.I2 = p["I2"].get<double>();
            if (p.contains("sigma")) {
                cfg.jet.sigma = detail::json_sigma(p["sigma"]);
                cfg.rotor.sigma = cfg.jet.sigma;
            }
            if (p.contains("eps")) { cfg.jet.eps = p["eps"].get<double>(); cfg.rotor.eps = p["eps"].get<double>(); }
            if (p.contains("h_mode")) cfg.rotor.h_mode = parse_h_mode(p["h_mode"].get<std::string>());
            if (p.contains("momentum_fix"))
                cfg.rotor.momentum_fix = parse_momentum_fix(p["momentum_fix"].get<std::string>());
        }
        if (doc.contains("integrator")) {
            const auto& it = doc["integrator"];
            if (it.contains("dt")) cfg.integrator.dt = it["dt"].get<double>();
            if (it.contains("horizon")) cfg.integrator.horizon = it["horizon"].get<double>();
            if (it.contains("scheme")) cfg.integrator.scheme = parse_scheme(it["scheme"].get<std::string>());
            if (it.contains("seed")) {
                cfg.integrator.seed = it["seed"].get<std::uint64_t>();
                cfg.seed_from_config = true;
            }
        }
        if (doc.contains("x0")) {
            const auto& xs = doc["x0"];
            if (!xs.is_array()) throw ConfigError("x0 must be an array");
            Eigen::VectorXd x(xs.size());
            for (std::size_t i = 0; i < xs.size(); ++i) x[static_cast<Eigen::Index>(i)] = xs[i].get<double>();
            cfg.x0 = x;
        }
        if (doc.contains("ensemble")) {
            const auto& e = doc["ensemble"];
            if (e.contains("n_paths")) cfg.ensemble.n_paths = e["n_paths"].get<std::size_t>();
            if (e.contains("epsilon1")) cfg.ensemble.epsilon1 = e["epsilon1"].get<double>();
            if (e.contains("threshold")) cfg.ensemble.threshold = e["threshold"].get<double>();
            if (e.contains("tail_fraction")) cfg.ensemble.tail_fraction = e["tail_fraction"].get<double>();
            if (e.contains("checkpoints")) cfg.ensemble.checkpoints = e["checkpoints"].get<std::size_t>();
            if (e.contains("norm_ceiling")) cfg.ensemble.norm_ceiling = e["norm_ceiling"].get<double>();
            if (e.contains("threads")) cfg.ensemble.threads = e["threads"].get<unsigned>();
        }
        if (doc.contains("outputs")) {
            const auto& o = doc["outputs"];
            if (o.contains("csv")) cfg.outputs.csv = o["csv"].get<std::string>();
            if (o.contains("svg")) cfg.outputs.svg = o["svg"].get<std::string>();
            if (o.contains("json")) cfg.outputs.json = o["json"].get<std::string>();
        }
        if (doc.contains("panels")) {
            for (const auto& p : doc["panels"]) cfg.panels.push_back(p.get<std::string>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open config file '" + path + "'");
    nlohmann::json doc;
    try {
        f >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return load_config_json(doc);
}

/// Seed precedence: explicit flag, then the config document, then the
/// STOCHLAB_SEED environment variable, then the built-in default.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag_seed, bool config_had_seed,
                                  std::uint64_t config_seed, const char* env_text) {
    if (flag_seed) return *flag_seed;
    if (config_had_seed) return config_seed;
    if (env_text) {
        char* end = nullptr;
        const unsigned long long parsed = std::strtoull(env_text, &end, 10);
        if (end == env_text || *end != '\0')
            throw ConfigError("STOCHLAB_SEED is not an unsigned integer");
        return parsed;
    }
    return config_seed;
}

}  // namespace stochlab
