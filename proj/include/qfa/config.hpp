#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "qfa/errors.hpp"
#include "qfa/experiments.hpp"
#include "qfa/interconnect.hpp"
#include "qfa/models.hpp"
#include "qfa/version.hpp"

namespace qfa {

/// Parsed and validated run configuration. Sections are optional at parse
/// time; each subcommand states which ones it needs. Validation is strict:
/// unknown keys, wrong types and out-of-range values are all config errors.
/// The accepted document shape is published in docs/config.schema.json.
struct PlantConfig {
    std::string type;  // "ndpa" | "detuned_ndpa"
    double kappa = 1.0;
    double lambda = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double gamma = 0.0;

    PlantModel build() const {
        if (type == "detuned_ndpa")
            return gamma > 0.0 ? build_ndpa(kappa, lambda, lambda, lambda, gamma)
                               : build_detuned_ndpa(kappa, lambda);
        return build_ndpa(kappa, lambda, delta1, delta2, gamma);
    }
};

struct ControllerConfig {
    std::string type;  // "beam_splitter"
    double beta = 0.0;

    ControllerModel build() const { return build_beam_splitter(beta); }
};

struct GridConfig {
    double omega_min = -2.0;
    double omega_max = 2.0;
    int n_points = 201;

    std::vector<double> omegas() const {
        std::vector<double> out(n_points);
        const double step = (omega_max - omega_min) / (n_points - 1);
        for (int i = 0; i < n_points; ++i) out[i] = omega_min + step * i;
        return out;
    }
};

struct OutputConfig {
    std::string format;  // "csv" | "json" | "" (subcommand default)
    std::string path;    // "" -> subcommand default
};

struct RunConfig {
    std::optional<PlantConfig> plant;
    std::optional<ControllerConfig> controller;
    std::optional<FeedbackLoopConfig> feedback;
    GridConfig grid;
    bool has_grid = false;
    MonteCarloConfig experiment;
    bool has_experiment = false;
    bool experiment_has_seed = false;
    OutputConfig output;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                                const std::string& where) {
    for (const auto& [key, value] : j.items())
        if (!known.contains(key))
            throw ConfigError("config: unknown key \"" + key + "\" in " + where);
}

inline double require_number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("config: missing key \"" + key + "\" in " + where);
    if (!j[key].is_number()) throw ConfigError("config: \"" + key + "\" in " + where + " must be a number");
    return j[key].get<double>();
}

inline double number_or(const json& j, const std::string& key, const std::string& where,
                        double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ConfigError("config: \"" + key + "\" in " + where + " must be a number");
    return j[key].get<double>();
}

inline std::string require_string(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError("config: missing key \"" + key + "\" in " + where);
    if (!j[key].is_string()) throw ConfigError("config: \"" + key + "\" in " + where + " must be a string");
    return j[key].get<std::string>();
}

inline PlantConfig parse_plant(const json& j) {
    reject_unknown_keys(j, {"type", "kappa", "lambda", "delta1", "delta2", "gamma"}, "plant");
    PlantConfig p;
    p.type = require_string(j, "type", "plant");
    if (p.type != "ndpa" && p.type != "detuned_ndpa")
        throw ConfigError("config: plant.type must be \"ndpa\" or \"detuned_ndpa\"");
    p.kappa = require_number(j, "kappa", "plant");
    p.lambda = require_number(j, "lambda", "plant");
    p.delta1 = number_or(j, "delta1", "plant", 0.0);
    p.delta2 = number_or(j, "delta2", "plant", 0.0);
    p.gamma = number_or(j, "gamma", "plant", 0.0);
    if (p.kappa <= 0.0) throw ConfigError("config: plant.kappa must be positive");
    if (p.gamma < 0.0) throw ConfigError("config: plant.gamma must be nonnegative");
    if (p.type == "detuned_ndpa" && (j.contains("delta1") || j.contains("delta2")))
        throw ConfigError("config: detuned_ndpa locks delta1 = delta2 = lambda; drop the keys");
    return p;
}

inline ControllerConfig parse_controller(const json& j) {
    reject_unknown_keys(j, {"type", "beta"}, "controller");
    ControllerConfig c;
    c.type = require_string(j, "type", "controller");
    if (c.type != "beam_splitter")
        throw ConfigError("config: controller.type must be \"beam_splitter\"");
    c.beta = require_number(j, "beta", "controller");
    if (std::abs(c.beta) > 1.0) throw ConfigError("config: controller.beta must satisfy |beta| <= 1");
    return c;
}

inline FeedbackLoopConfig parse_feedback(const json& j) {
    reject_unknown_keys(j, {"alpha1", "alpha2"}, "feedback");
    FeedbackLoopConfig f;
    f.alpha1 = require_number(j, "alpha1", "feedback");
    f.alpha2 = require_number(j, "alpha2", "feedback");
    try {
        f.validate();
    } catch (const ParameterError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return f;
}

inline GridConfig parse_grid(const json& j) {
    reject_unknown_keys(j, {"omega_min", "omega_max", "n_points"}, "grid");
    GridConfig g;
    g.omega_min = require_number(j, "omega_min", "grid");
    g.omega_max = require_number(j, "omega_max", "grid");
    if (!j.contains("n_points")) throw ConfigError("config: missing key \"n_points\" in grid");
    if (!j["n_points"].is_number_integer())
        throw ConfigError("config: grid.n_points must be an integer");
    g.n_points = j["n_points"].get<int>();
    if (g.n_points < 2) throw ConfigError("config: grid.n_points must be >= 2");
    if (!(g.omega_min < g.omega_max))
        throw ConfigError("config: grid.omega_min must be < grid.omega_max");
    return g;
}

inline SweepSpec parse_sweep(const json& j) {
    reject_unknown_keys(j, {"axis", "values"}, "experiment.sweep");
    SweepSpec s;
    const std::string axis = require_string(j, "axis", "experiment.sweep");
    if (axis == "gamma")
        s.axis = SweepSpec::Axis::gamma;
    else if (axis == "alpha")
        s.axis = SweepSpec::Axis::alpha;
    else
        throw ConfigError("config: experiment.sweep.axis must be \"gamma\" or \"alpha\"");
    if (!j.contains("values") || !j["values"].is_array() || j["values"].empty())
        throw ConfigError("config: experiment.sweep.values must be a nonempty array");
    for (const auto& v : j["values"]) {
        if (!v.is_number()) throw ConfigError("config: experiment.sweep.values must be numbers");
        s.values.push_back(v.get<double>());
    }
    return s;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::json& j) {
    using detail::reject_unknown_keys;
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    reject_unknown_keys(j,
                        {"schema_version", "plant", "controller", "feedback", "grid", "experiment",
                         "output"},
                        "top level");
    if (j.contains("schema_version")) {
        if (!j["schema_version"].is_number_integer() ||
            j["schema_version"].get<int>() != kConfigSchemaVersion)
            throw ConfigError("config: unsupported schema_version (expected 1)");
    }

    RunConfig rc;
    if (j.contains("plant")) rc.plant = detail::parse_plant(j["plant"]);
    if (j.contains("controller")) rc.controller = detail::parse_controller(j["controller"]);
    if (j.contains("feedback")) rc.feedback = detail::parse_feedback(j["feedback"]);
    if (j.contains("grid")) {
        rc.grid = detail::parse_grid(j["grid"]);
        rc.has_grid = true;
    }
    if (j.contains("output")) {
        const auto& o = j["output"];
        reject_unknown_keys(o, {"format", "path"}, "output");
        if (o.contains("format")) {
            rc.output.format = o["format"].get<std::string>();
            if (rc.output.format != "csv" && rc.output.format != "json")
                throw ConfigError("config: output.format must be \"csv\" or \"json\"");
        }
        if (o.contains("path")) rc.output.path = o["path"].get<std::string>();
    }
    if (j.contains("experiment")) {
        const auto& e = j["experiment"];
        reject_unknown_keys(e,
                            {"seed", "n_samples", "rel_lambda", "rel_delta", "delta_base",
                             "sweep", "omega_eval"},
                            "experiment");
        rc.has_experiment = true;
        MonteCarloConfig& mc = rc.experiment;
        if (e.contains("seed")) {
            if (!e["seed"].is_number_integer())
                throw ConfigError("config: experiment.seed must be an integer");
            mc.seed = e["seed"].get<std::uint64_t>();
            rc.experiment_has_seed = true;
        }
        if (e.contains("n_samples")) {
            if (!e["n_samples"].is_number_integer())
                throw ConfigError("config: experiment.n_samples must be an integer");
            mc.n_samples = e["n_samples"].get<int>();
            if (mc.n_samples < 1) throw ConfigError("config: experiment.n_samples must be >= 1");
        }
        mc.perturbation.rel_lambda =
            detail::number_or(e, "rel_lambda", "experiment", mc.perturbation.rel_lambda);
        mc.perturbation.rel_delta =
            detail::number_or(e, "rel_delta", "experiment", mc.perturbation.rel_delta);
        if (mc.perturbation.rel_lambda < 0.0 || mc.perturbation.rel_delta < 0.0)
            throw ConfigError("config: experiment perturbation magnitudes must be nonnegative");
        if (e.contains("delta_base")) {
            const std::string base = e["delta_base"].get<std::string>();
            if (base == "perturbed_lambda")
                mc.delta_base = DeltaBase::perturbed_lambda;
            else if (base == "nominal_lambda")
                mc.delta_base = DeltaBase::nominal_lambda;
            else
                throw ConfigError(
                    "config: experiment.delta_base must be \"perturbed_lambda\" or \"nominal_lambda\"");
        }
        mc.omega_eval = detail::number_or(e, "omega_eval", "experiment", 0.0);
        if (e.contains("sweep")) mc.sweep = detail::parse_sweep(e["sweep"]);
    }
    return rc;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config: JSON parse error in " + path.string() + ": " + e.what());
    }
    return parse_run_config(j);
}

/// Populate the experiment's plant/loop fields from the other sections.
/// The montecarlo subcommand requires a detuned_ndpa plant (the perturbation
/// model detunes around lambda) and a beam-splitter controller.
inline MonteCarloConfig assemble_experiment(const RunConfig& rc) {
    if (!rc.plant) throw ConfigError("config: experiment requires a plant section");
    if (rc.plant->type != "detuned_ndpa")
        throw ConfigError("config: experiments perturb the detuned_ndpa family; set plant.type accordingly");
    if (!rc.controller) throw ConfigError("config: experiment requires a controller section");
    MonteCarloConfig mc = rc.experiment;
    mc.kappa = rc.plant->kappa;
    mc.lambda0 = rc.plant->lambda;
    mc.gamma = rc.plant->gamma;
    mc.beta = rc.controller->beta;
    if (rc.feedback) mc.loop = *rc.feedback;
    return mc;
}

}  // namespace qfa
