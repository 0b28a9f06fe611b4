#pragma once

#include <fstream>
#include <set>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "fracheat/density.hpp"

namespace fracheat {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    nlohmann::json j;
    j["hurst"] = cfg.hurst;
    j["gamma"] = cfg.solver.gamma;
    j["kappa"] = cfg.solver.kappa;
    j["n_modes"] = cfg.solver.n_modes;
    j["time_steps"] = cfg.solver.time_steps;
    j["horizon"] = cfg.solver.horizon;
    j["tolerance"] = cfg.solver.tolerance;
    j["n_paths"] = cfg.n_paths;
    j["seed"] = cfg.seed;
    j["lambda0"] = cfg.lambda0;
    j["family_scale"] = cfg.family_scale;
    j["kernel"] = cfg.kernel;
    j["kernel_sigma"] = cfg.kernel_sigma;
    j["xi"] = cfg.xi;
    j["dimension"] = cfg.dimension;
    j["family"] = cfg.family;
    j["phi_amplitude"] = cfg.phi_amplitude;
    j["phi_jitter"] = cfg.phi_jitter;
    j["kde_bandwidth"] = cfg.kde_bandwidth;
    j["bound_ids"] = cfg.bound_ids;
    j["malliavin_summaries"] = cfg.malliavin_summaries;
    j["malliavin_stride"] = cfg.malliavin_stride;
    return j;
}

/// Builds an ExperimentConfig from a JSON object. Unknown keys are rejected;
/// missing keys take the documented defaults. Constraint violations raise a
/// ConfigError naming the constraint.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    static const std::set<std::string> known = {
        "hurst", "gamma", "kappa", "n_modes", "time_steps", "horizon", "tolerance",
        "n_paths", "seed", "lambda0", "family_scale", "kernel", "kernel_sigma", "xi",
        "dimension", "family", "phi_amplitude", "phi_jitter", "kde_bandwidth", "bound_ids",
        "malliavin_summaries", "malliavin_stride"};
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key()))
            throw ConfigError("config: unknown key '" + it.key() + "'");
    }
    ExperimentConfig cfg;
    try {
        cfg.hurst = j.value("hurst", cfg.hurst);
        cfg.solver.gamma = j.value("gamma", cfg.solver.gamma);
        cfg.solver.kappa = j.value("kappa", cfg.solver.kappa);
        cfg.solver.n_modes = j.value("n_modes", cfg.solver.n_modes);
        cfg.solver.time_steps = j.value("time_steps", cfg.solver.time_steps);
        cfg.solver.horizon = j.value("horizon", cfg.solver.horizon);
        cfg.solver.tolerance = j.value("tolerance", cfg.solver.tolerance);
        cfg.n_paths = j.value("n_paths", cfg.n_paths);
        cfg.seed = j.value("seed", cfg.seed);
        cfg.lambda0 = j.value("lambda0", cfg.lambda0);
        cfg.family_scale = j.value("family_scale", cfg.family_scale);
        cfg.kernel = j.value("kernel", cfg.kernel);
        cfg.kernel_sigma = j.value("kernel_sigma", cfg.kernel_sigma);
        cfg.xi = j.value("xi", cfg.xi);
        cfg.dimension = j.value("dimension", cfg.dimension);
        cfg.family = j.value("family", cfg.family);
        cfg.phi_amplitude = j.value("phi_amplitude", cfg.phi_amplitude);
        cfg.phi_jitter = j.value("phi_jitter", cfg.phi_jitter);
        cfg.kde_bandwidth = j.value("kde_bandwidth", cfg.kde_bandwidth);
        if (j.contains("bound_ids"))
            cfg.bound_ids = j.at("bound_ids").get<std::vector<std::string>>();
        cfg.malliavin_summaries = j.value("malliavin_summaries", cfg.malliavin_summaries);
        cfg.malliavin_stride = j.value("malliavin_stride", cfg.malliavin_stride);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: type error: ") + e.what());
    }
    try {
        cfg.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: validation-error: ") + e.what());
    }
    return cfg;
}

/// Parses a JSON config file. Malformed JSON raises a ConfigError carrying the
/// parser's position diagnostics.
inline ExperimentConfig parse_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("config: parse-error: ") + e.what());
    }
    return config_from_json(j);
}

}  // namespace fracheat
