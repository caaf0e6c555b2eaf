// qfa: command-line front end. Loads a JSON run configuration, executes one
// analysis or experiment pipeline, writes CSV/JSON artifacts and prints a
// one-line summary.
//
// Exit codes: 0 success, 2 config error, 3 numeric/stability error,
// 4 pole-on-axis error, 64 usage error.

#include <complex>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qfa/qfa.hpp"

namespace {

using qfa::Json;

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::string format;
    std::optional<double> omega_min, omega_max;
    std::optional<int> n_points;
    std::optional<double> omega;
    std::optional<double> beta;
    std::optional<std::uint64_t> seed;
    std::optional<int> samples;
    std::string flavor;
    double margin = 1e-9;
    double tol = 1e-9;
};

qfa::RunConfig load_and_override(const CommonOpts& opts) {
    qfa::RunConfig rc = qfa::load_run_config(opts.config_path);
    if (opts.omega_min) rc.grid.omega_min = *opts.omega_min;
    if (opts.omega_max) rc.grid.omega_max = *opts.omega_max;
    if (opts.n_points) rc.grid.n_points = *opts.n_points;
    if (opts.omega_min || opts.omega_max || opts.n_points) rc.has_grid = true;
    if (opts.beta) {
        if (!rc.controller) rc.controller = qfa::ControllerConfig{"beam_splitter", *opts.beta};
        else rc.controller->beta = *opts.beta;
    }
    if (opts.seed) {
        rc.experiment.seed = *opts.seed;
        rc.experiment_has_seed = true;
    } else if (!rc.experiment_has_seed) {
        if (const char* env = std::getenv("QFA_SEED")) {
            rc.experiment.seed = std::strtoull(env, nullptr, 10);
            rc.experiment_has_seed = true;
        }
    }
    if (opts.samples) rc.experiment.n_samples = *opts.samples;
    if (!(rc.grid.omega_min < rc.grid.omega_max) || rc.grid.n_points < 2)
        throw qfa::ConfigError("config: invalid grid after flag overrides");
    return rc;
}

qfa::PlantModel require_plant(const qfa::RunConfig& rc) {
    if (!rc.plant) throw qfa::ConfigError("config: this subcommand requires a plant section");
    return rc.plant->build();
}

/// Closed loop when a controller is configured, otherwise nothing.
std::optional<qfa::ClosedLoopSystem> maybe_closed_loop(const qfa::RunConfig& rc,
                                                       const qfa::PlantModel& plant) {
    if (!rc.controller) return std::nullopt;
    const qfa::ControllerModel controller = rc.controller->build();
    const qfa::FeedbackLoopConfig loop = rc.feedback.value_or(qfa::FeedbackLoopConfig{});
    return qfa::close_lossy_feedback(plant, controller, loop);
}

std::string resolve_path(const CommonOpts& opts, const qfa::RunConfig& rc,
                         const std::string& fallback) {
    if (!opts.out_path.empty()) return opts.out_path;
    if (!rc.output.path.empty()) return rc.output.path;
    return fallback;
}

std::string resolve_format(const CommonOpts& opts, const qfa::RunConfig& rc,
                           const std::string& fallback) {
    if (!opts.format.empty()) return opts.format;
    if (!rc.output.format.empty()) return rc.output.format;
    return fallback;
}

Json poles_json(const std::vector<qfa::Complex>& poles) {
    Json arr = Json::array();
    for (const auto& p : poles) arr.push_back(Json{{"re", p.real()}, {"im", p.imag()}});
    return arr;
}

Json curve_json(const qfa::GainCurve& curve) {
    Json rows = Json::array();
    const auto db = curve.gain_db();
    const auto ph = curve.phase_deg();
    for (std::size_t i = 0; i < curve.omegas.size(); ++i)
        rows.push_back(Json{{"omega", curve.omegas[i]},
                            {"re", curve.values[i].real()},
                            {"im", curve.values[i].imag()},
                            {"gain_db", db[i]},
                            {"phase_deg", ph[i]}});
    return rows;
}

int run_gain(const CommonOpts& opts) {
    const qfa::RunConfig rc = load_and_override(opts);
    const qfa::PlantModel plant = require_plant(rc);
    const auto closed = maybe_closed_loop(rc, plant);
    const qfa::GainCurve curve =
        closed ? qfa::gain_profile(*closed, rc.grid.omega_min, rc.grid.omega_max, rc.grid.n_points)
               : qfa::gain_profile(plant, rc.grid.omega_min, rc.grid.omega_max, rc.grid.n_points);

    const std::string format = resolve_format(opts, rc, "csv");
    const std::string path = resolve_path(opts, rc, "gain." + format);
    if (format == "csv") {
        qfa::write_text_atomic(path, qfa::gain_curve_csv(curve).to_string());
    } else {
        Json j{{"schema_version", qfa::kResultSchemaVersion},
               {"artifact_version", qfa::kVersion},
               {"kind", closed ? "closed_loop_gain" : "plant_gain"},
               {"data", curve_json(curve)}};
        qfa::write_text_atomic(path, j.dump(2) + "\n");
    }

    const auto db = curve.gain_db();
    const std::size_t peak = std::max_element(db.begin(), db.end()) - db.begin();
    std::cout << (closed ? "closed-loop" : "plant") << " gain: " << curve.omegas.size()
              << " points, peak " << qfa::format_g12(db[peak]) << " dB at omega = "
              << qfa::format_g12(curve.omegas[peak]) << ", wrote " << path << "\n";
    return 0;
}

int run_poles(const CommonOpts& opts) {
    const qfa::RunConfig rc = load_and_override(opts);
    const qfa::PlantModel plant = require_plant(rc);
    const auto closed = maybe_closed_loop(rc, plant);
    const std::vector<qfa::Complex> poles = closed ? closed->poles : plant.poles();

    const std::string format = resolve_format(opts, rc, "json");
    const std::string path = resolve_path(opts, rc, "poles." + format);
    if (format == "csv") {
        qfa::write_text_atomic(path, qfa::poles_csv(poles).to_string());
    } else {
        Json j{{"schema_version", qfa::kResultSchemaVersion},
               {"artifact_version", qfa::kVersion},
               {"kind", closed ? "closed_loop_poles" : "plant_poles"},
               {"poles", poles_json(poles)}};
        qfa::write_text_atomic(path, j.dump(2) + "\n");
    }
    std::cout << poles.size() << " poles, wrote " << path << "\n";
    return 0;
}

int run_stability(const CommonOpts& opts) {
    const qfa::RunConfig rc = load_and_override(opts);
    const qfa::PlantModel plant = require_plant(rc);
    const auto closed = maybe_closed_loop(rc, plant);
    const qfa::StabilityVerdict v =
        closed ? qfa::stability(*closed, opts.margin) : qfa::stability(plant, opts.margin);

    const std::string path = resolve_path(opts, rc, "stability.json");
    Json j{{"schema_version", qfa::kResultSchemaVersion},
           {"artifact_version", qfa::kVersion},
           {"kind", closed ? "closed_loop_stability" : "plant_stability"},
           {"stable", v.stable},
           {"marginal", v.marginal},
           {"max_real_part", v.max_real_part},
           {"margin", v.margin},
           {"poles", poles_json(v.poles)}};
    qfa::write_text_atomic(path, j.dump(2) + "\n");
    std::cout << (v.stable ? "stable" : (v.marginal ? "marginal/unstable" : "unstable"))
              << ", max Re(pole) = " << qfa::format_g12(v.max_real_part) << ", wrote " << path
              << "\n";
    return 0;
}

int run_noise(const CommonOpts& opts) {
    const qfa::RunConfig rc = load_and_override(opts);
    const qfa::PlantModel plant = require_plant(rc);
    const auto closed = maybe_closed_loop(rc, plant);

    qfa::NoiseFlavor flavor =
        closed ? qfa::NoiseFlavor::closed_loop : qfa::NoiseFlavor::plant;
    if (opts.flavor == "ideal") flavor = qfa::NoiseFlavor::ideal;
    else if (opts.flavor == "plant") flavor = qfa::NoiseFlavor::plant;
    else if (opts.flavor == "closed") flavor = qfa::NoiseFlavor::closed_loop;
    else if (!opts.flavor.empty()) throw qfa::ConfigError("--flavor must be ideal|plant|closed");
    if (flavor == qfa::NoiseFlavor::closed_loop && !closed)
        throw qfa::ConfigError("config: closed-loop noise needs a controller section");

    std::vector<double> omegas;
    if (rc.has_grid) omegas = rc.grid.omegas();
    else omegas = {opts.omega.value_or(0.0)};

    std::vector<qfa::NoiseReport> reports;
    reports.reserve(omegas.size());
    for (double w : omegas)
        reports.push_back(flavor == qfa::NoiseFlavor::closed_loop
                              ? qfa::added_noise(*closed, w, flavor)
                              : qfa::added_noise(plant, w, flavor));

    const std::string format = resolve_format(opts, rc, "csv");
    const std::string path = resolve_path(opts, rc, "noise." + format);
    if (format == "csv") {
        qfa::write_text_atomic(path, qfa::noise_csv(reports).to_string());
    } else {
        Json rows = Json::array();
        for (const auto& r : reports)
            rows.push_back(Json{{"omega", r.omega},
                                {"a_value", r.a_value},
                                {"half_term", r.half_term},
                                {"gain_term", r.gain_term},
                                {"excess_term", r.excess_term}});
        Json j{{"schema_version", qfa::kResultSchemaVersion},
               {"artifact_version", qfa::kVersion},
               {"kind", "added_noise"},
               {"data", rows}};
        qfa::write_text_atomic(path, j.dump(2) + "\n");
    }
    std::cout << "added noise (" << reports.size() << " rows), A(omega="
              << qfa::format_g12(reports.front().omega)
              << ") = " << qfa::format_g12(reports.front().a_value) << ", wrote " << path << "\n";
    return 0;
}

int run_sensitivity(const CommonOpts& opts) {
    const qfa::RunConfig rc = load_and_override(opts);
    const qfa::PlantModel plant = require_plant(rc);
    if (!rc.controller) throw qfa::ConfigError("config: sensitivity requires a controller section");
    const double w = opts.omega.value_or(0.0);
    const double bound = qfa::sensitivity_bound(plant, rc.controller->build(), w);

    const std::string format = resolve_format(opts, rc, "json");
    const std::string path = resolve_path(opts, rc, "sensitivity." + format);
    if (format == "csv") {
        qfa::CsvTable t;
        t.header = {"omega", "bound"};
        t.rows.push_back({w, bound});
        qfa::write_text_atomic(path, t.to_string());
    } else {
        Json j{{"schema_version", qfa::kResultSchemaVersion},
               {"artifact_version", qfa::kVersion},
               {"kind", "sensitivity_bound"},
               {"omega", w},
               {"bound", bound}};
        qfa::write_text_atomic(path, j.dump(2) + "\n");
    }
    std::cout << "sensitivity bound at omega = " << qfa::format_g12(w) << ": "
              << qfa::format_g12(bound) << ", wrote " << path << "\n";
    return 0;
}

int run_bode(const CommonOpts& opts) {
    const qfa::RunConfig rc = load_and_override(opts);
    const qfa::PlantModel plant = require_plant(rc);
    if (!rc.controller) throw qfa::ConfigError("config: bode requires a controller section");
    const qfa::GainCurve curve =
        qfa::loop_gain_bode(plant, rc.controller->build(), rc.grid.omegas());

    const std::string format = resolve_format(opts, rc, "csv");
    const std::string path = resolve_path(opts, rc, "bode." + format);
    if (format == "csv") {
        qfa::write_text_atomic(path, qfa::gain_curve_csv(curve, /*include_raw_phase=*/true).to_string());
    } else {
        Json j{{"schema_version", qfa::kResultSchemaVersion},
               {"artifact_version", qfa::kVersion},
               {"kind", "loop_gain_bode"},
               {"data", curve_json(curve)}};
        qfa::write_text_atomic(path, j.dump(2) + "\n");
    }
    std::cout << "loop-gain bode: " << curve.omegas.size() << " points, wrote " << path << "\n";
    return 0;
}

int run_constraints(const CommonOpts& opts) {
    const qfa::RunConfig rc = load_and_override(opts);
    const qfa::PlantModel plant = require_plant(rc);
    const qfa::ConstraintReport report =
        qfa::check_scattering_constraints(plant.matrix, rc.grid.omegas(), opts.tol);

    const std::string format = resolve_format(opts, rc, "csv");
    const std::string path = resolve_path(opts, rc, "constraints." + format);
    if (format == "csv") {
        qfa::write_text_atomic(path, qfa::constraint_csv(report).to_string());
    } else {
        Json rows = Json::array();
        for (const auto& row : report.rows)
            rows.push_back(Json{{"omega", row.omega}, {"residuals", row.residuals}});
        Json j{{"schema_version", qfa::kResultSchemaVersion},
               {"artifact_version", qfa::kVersion},
               {"kind", "scattering_constraints"},
               {"identities", report.identity_names},
               {"max_residual", report.max_residual},
               {"tol", report.tol},
               {"pass", report.pass},
               {"data", rows}};
        qfa::write_text_atomic(path, j.dump(2) + "\n");
    }
    std::cout << "scattering constraints: max residual = " << qfa::format_g12(report.max_residual)
              << " over " << report.rows.size() << " frequencies -> "
              << (report.pass ? "pass" : "FAIL") << ", wrote " << path << "\n";
    return 0;
}

int run_montecarlo(const CommonOpts& opts) {
    const qfa::RunConfig rc = load_and_override(opts);
    const qfa::MonteCarloConfig mc = qfa::assemble_experiment(rc);
    const qfa::MonteCarloResult result =
        mc.sweep ? qfa::run_noise_experiment(mc) : qfa::run_robustness_experiment(mc);

    std::string path = resolve_path(opts, rc, "montecarlo.json");
    const Json j = qfa::to_json(result);
    qfa::validate_result_json(j);
    qfa::write_text_atomic(path, j.dump(2) + "\n");

    std::filesystem::path csv_path(path);
    csv_path.replace_extension(".csv");
    qfa::write_text_atomic(csv_path.string(), qfa::montecarlo_summary_csv(result).to_string());

    if (result.is_sweep) {
        std::cout << "noise sweep: " << result.sweep_points.size() << " points x "
                  << mc.n_samples << " samples, wrote " << path << " and " << csv_path.string()
                  << "\n";
    } else {
        std::cout << "robustness: " << mc.n_samples << " samples, suppression_ratio = "
                  << qfa::format_g12(result.suppression_ratio)
                  << ", excluded = " << result.summary.excluded << ", wrote " << path << " and "
                  << csv_path.string() << "\n";
    }
    return 0;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool grid, bool omega, bool mc) {
    cmd->add_option("--config", opts.config_path, "JSON run configuration")->required();
    cmd->add_option("--out", opts.out_path, "output path (default: <subcommand>.<ext>)");
    cmd->add_option("--format", opts.format, "output format: csv|json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--beta", opts.beta, "override controller reflectivity");
    if (grid) {
        cmd->add_option("--omega-range", [&opts](const std::vector<std::string>& vals) {
                opts.omega_min = std::stod(vals[0]);
                opts.omega_max = std::stod(vals[1]);
                return true;
            }, "frequency range MIN MAX")->expected(2);
        cmd->add_option("--points", opts.n_points, "grid points");
    }
    if (omega) cmd->add_option("--omega", opts.omega, "evaluation frequency (default 0)");
    if (mc) {
        cmd->add_option("--seed", opts.seed, "RNG seed (overrides config and QFA_SEED)");
        cmd->add_option("--samples", opts.samples, "sample count");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"linear quantum amplifier networks: gain, stability, noise and robustness"};
    app.require_subcommand(1);
    app.fallthrough(false);

    CommonOpts opts;
    int which = 0;

    auto* gain = app.add_subcommand("gain", "sample the amplification gain on a frequency grid");
    add_common(gain, opts, true, false, false);
    gain->callback([&] { which = 1; });

    auto* poles = app.add_subcommand("poles", "compute plant or closed-loop poles");
    add_common(poles, opts, false, false, false);
    poles->callback([&] { which = 2; });

    auto* stab = app.add_subcommand("stability", "pole-placement stability verdict");
    add_common(stab, opts, false, false, false);
    stab->add_option("--margin", opts.margin, "stability margin (default 1e-9)");
    stab->callback([&] { which = 3; });

    auto* noise = app.add_subcommand("noise", "added noise and its decomposition");
    add_common(noise, opts, true, true, false);
    noise->add_option("--flavor", opts.flavor, "ideal|plant|closed")
        ->check(CLI::IsMember({"ideal", "plant", "closed"}));
    noise->callback([&] { which = 4; });

    auto* sens = app.add_subcommand("sensitivity", "gain-fluctuation suppression bound");
    add_common(sens, opts, false, true, false);
    sens->callback([&] { which = 5; });

    auto* bode = app.add_subcommand("bode", "loop-gain magnitude and phase");
    add_common(bode, opts, true, false, false);
    bode->callback([&] { which = 6; });

    auto* mc = app.add_subcommand("montecarlo", "seeded robustness or noise-sweep experiment");
    add_common(mc, opts, false, false, true);
    mc->callback([&] { which = 7; });

    auto* cons = app.add_subcommand("constraints", "scattering-identity residuals on a grid");
    add_common(cons, opts, true, false, false);
    cons->add_option("--tol", opts.tol, "pass/fail tolerance (default 1e-9)");
    cons->callback([&] { which = 8; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n\n" << app.help() << "\n";
        return 64;
    }

    try {
        switch (which) {
            case 1: return run_gain(opts);
            case 2: return run_poles(opts);
            case 3: return run_stability(opts);
            case 4: return run_noise(opts);
            case 5: return run_sensitivity(opts);
            case 6: return run_bode(opts);
            case 7: return run_montecarlo(opts);
            case 8: return run_constraints(opts);
        }
        std::cerr << app.help() << "\n";
        return 64;
    } catch (const qfa::PoleEvaluationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const qfa::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const qfa::ParameterError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const qfa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
