#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "qfa/analysis.hpp"
#include "qfa/errors.hpp"
#include "qfa/experiments.hpp"
#include "qfa/models.hpp"
#include "qfa/version.hpp"

namespace qfa {

using Json = nlohmann::ordered_json;

/// %.12g, locale-independent (std::to_chars).
inline std::string format_g12(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

/// Write via a temp file in the same directory, then rename into place.
inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out.flush()) throw Error("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("rename failed: " + path.string() + ": " + ec.message());
}

/// One CSV table: mandatory header row, %.12g cells, newline-terminated rows.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    std::string to_string() const {
        std::string out;
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) out += ',';
            out += header[i];
        }
        out += '\n';
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                if (i) out += ',';
                out += format_g12(row[i]);
            }
            out += '\n';
        }
        return out;
    }
};

inline CsvTable gain_curve_csv(const GainCurve& curve, bool include_raw_phase = false) {
    CsvTable t;
    t.header = {"omega", "re", "im", "gain_db", "phase_deg"};
    if (include_raw_phase) t.header.push_back("phase_deg_raw");
    const std::vector<double> db = curve.gain_db();
    const std::vector<double> ph = curve.phase_deg();
    const std::vector<double> ph_raw = curve.phase_deg_raw();
    for (std::size_t i = 0; i < curve.omegas.size(); ++i) {
        std::vector<double> row = {curve.omegas[i], curve.values[i].real(),
                                   curve.values[i].imag(), db[i], ph[i]};
        if (include_raw_phase) row.push_back(ph_raw[i]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

inline CsvTable noise_csv(const std::vector<NoiseReport>& reports) {
    CsvTable t;
    t.header = {"omega", "a_value", "half_term", "gain_term", "excess_term"};
    for (const NoiseReport& r : reports)
        t.rows.push_back({r.omega, r.a_value, r.half_term, r.gain_term, r.excess_term});
    return t;
}

inline CsvTable constraint_csv(const ConstraintReport& report) {
    CsvTable t;
    t.header = {"omega"};
    for (std::size_t i = 0; i < report.identity_names.size(); ++i)
        t.header.push_back("residual_" + std::to_string(i + 1));
    for (const auto& row : report.rows) {
        std::vector<double> cells = {row.omega};
        cells.insert(cells.end(), row.residuals.begin(), row.residuals.end());
        t.rows.push_back(std::move(cells));
    }
    return t;
}

inline CsvTable poles_csv(const std::vector<Complex>& poles) {
    CsvTable t;
    t.header = {"re", "im"};
    for (const Complex& p : poles) t.rows.push_back({p.real(), p.imag()});
    return t;
}

// --- JSON emission -----------------------------------------------------------

inline Json to_json(const SummaryStats& s) {
    return Json{{"mean", s.mean}, {"std", s.stddev}, {"min", s.min}, {"max", s.max},
                {"count", s.count}};
}

inline Json to_json(const GroupSummary& g) {
    return Json{{"open_gain", to_json(g.open_gain)},
                {"closed_gain", to_json(g.closed_gain)},
                {"a_open", to_json(g.a_open)},
                {"a_fb", to_json(g.a_fb)},
                {"excluded", g.excluded}};
}

inline Json to_json(const SampleRecord& r) {
    return Json{{"epsilons", {r.epsilons[0], r.epsilons[1], r.epsilons[2]}},
                {"open_loop_gain", r.open_loop_gain},
                {"closed_loop_gain", r.closed_loop_gain},
                {"a_open", r.a_open},
                {"a_fb", r.a_fb},
                {"plant_stable", r.plant_stable},
                {"closed_stable", r.closed_stable}};
}

inline Json config_echo(const MonteCarloConfig& c) {
    Json j{{"seed", c.seed},
           {"n_samples", c.n_samples},
           {"kappa", c.kappa},
           {"lambda0", c.lambda0},
           {"gamma", c.gamma},
           {"beta", c.beta},
           {"alpha1", c.loop.alpha1},
           {"alpha2", c.loop.alpha2},
           {"rel_lambda", c.perturbation.rel_lambda},
           {"rel_delta", c.perturbation.rel_delta},
           {"delta_base", c.delta_base == DeltaBase::perturbed_lambda ? "perturbed_lambda"
                                                                      : "nominal_lambda"},
           {"omega_eval", c.omega_eval}};
    if (c.sweep) {
        j["sweep"] = Json{{"axis", c.sweep->axis == SweepSpec::Axis::gamma ? "gamma" : "alpha"},
                          {"values", c.sweep->values}};
    }
    return j;
}

inline Json to_json(const MonteCarloResult& result) {
    Json j{{"schema_version", kResultSchemaVersion},
           {"artifact_version", kVersion},
           {"rng", Json{{"name", result.rng_name},
                        {"version", result.rng_version},
                        {"stream", kRngStreamRule}}},
           {"seed", result.config.seed},
           {"experiment", result.is_sweep ? "noise_sweep" : "robustness"},
           {"config", config_echo(result.config)}};
    if (result.is_sweep) {
        Json points = Json::array();
        for (const SweepPointResult& p : result.sweep_points) {
            Json samples = Json::array();
            for (const SampleRecord& r : p.samples) samples.push_back(to_json(r));
            points.push_back(Json{{"sweep_value", p.value},
                                  {"samples", std::move(samples)},
                                  {"summary", to_json(p.summary)}});
        }
        j["sweep_points"] = std::move(points);
    } else {
        Json samples = Json::array();
        for (const SampleRecord& r : result.per_sample) samples.push_back(to_json(r));
        j["samples"] = std::move(samples);
        j["summary"] = to_json(result.summary);
        if (std::isnan(result.suppression_ratio))
            j["suppression_ratio"] = nullptr;
        else
            j["suppression_ratio"] = result.suppression_ratio;
        j["zero_spread"] = result.zero_spread;
    }
    return j;
}

/// Flat per-point summary table for sweep results, or a single-row table for
/// robustness results.
inline CsvTable montecarlo_summary_csv(const MonteCarloResult& result) {
    CsvTable t;
    if (result.is_sweep) {
        t.header = {"sweep_value", "a_open_mean", "a_open_std", "a_fb_mean", "a_fb_std",
                    "open_gain_mean", "closed_gain_mean", "excluded"};
        for (const SweepPointResult& p : result.sweep_points)
            t.rows.push_back({p.value, p.summary.a_open.mean, p.summary.a_open.stddev,
                              p.summary.a_fb.mean, p.summary.a_fb.stddev,
                              p.summary.open_gain.mean, p.summary.closed_gain.mean,
                              double(p.summary.excluded)});
    } else {
        t.header = {"open_gain_mean", "open_gain_std", "closed_gain_mean", "closed_gain_std",
                    "suppression_ratio", "excluded"};
        t.rows.push_back({result.summary.open_gain.mean, result.summary.open_gain.stddev,
                          result.summary.closed_gain.mean, result.summary.closed_gain.stddev,
                          result.suppression_ratio, double(result.summary.excluded)});
    }
    return t;
}

/// Structural check applied to every emitted Monte Carlo JSON document.
inline void validate_result_json(const Json& j) {
    auto require = [&](const char* key) {
        if (!j.contains(key)) throw ConfigError(std::string("result JSON missing key: ") + key);
    };
    require("schema_version");
    require("artifact_version");
    require("rng");
    require("seed");
    require("experiment");
    require("config");
    if (j["schema_version"].get<int>() != kResultSchemaVersion)
        throw ConfigError("result JSON: unsupported schema_version");
    const std::string kind = j["experiment"].get<std::string>();
    if (kind == "robustness") {
        if (!j.contains("samples") || !j.contains("summary") || !j.contains("suppression_ratio"))
            throw ConfigError("result JSON: robustness document incomplete");
    } else if (kind == "noise_sweep") {
        if (!j.contains("sweep_points") || !j["sweep_points"].is_array() ||
            j["sweep_points"].empty())
            throw ConfigError("result JSON: noise_sweep document incomplete");
    } else {
        throw ConfigError("result JSON: unknown experiment kind " + kind);
    }
}

}  // namespace qfa
