#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qfa/analysis.hpp"
#include "qfa/errors.hpp"
#include "qfa/interconnect.hpp"
#include "qfa/models.hpp"

namespace qfa {

/// SplitMix64 (Steele, Lea & Flood's 64-bit mixer). Chosen because streams
/// are cheap to derive: the per-sample stream is seeded with
/// seed XOR sample_index, which makes sample evaluation order-independent.
struct SplitMix64 {
    std::uint64_t state;

    explicit SplitMix64(std::uint64_t seed) : state(seed) {}

    std::uint64_t next() {
        state += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1), 53-bit resolution.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Uniform in [-1, 1].
    double uniform_pm1() { return 2.0 * uniform01() - 1.0; }
};

inline constexpr const char* kRngName = "splitmix64";
inline constexpr const char* kRngVersion = "1.0";
inline constexpr const char* kRngStreamRule = "seed xor sample_index";

/// Relative perturbation magnitudes for the fragile plant parameters.
/// epsilon draws are independent uniforms on [-1, 1].
struct PerturbationSpec {
    double rel_lambda = 0.1;
    double rel_delta = 0.001;

    void validate() const {
        if (rel_lambda < 0.0 || rel_delta < 0.0)
            throw ParameterError("PerturbationSpec: magnitudes must be nonnegative");
    }
};

/// Whether the perturbed detunings track the perturbed coupling strength
/// (the literal reading) or the nominal one. The 1e-3 scale makes the
/// difference negligible, but the choice is explicit.
enum class DeltaBase { perturbed_lambda, nominal_lambda };

struct SweepSpec {
    enum class Axis { gamma, alpha };
    Axis axis = Axis::gamma;
    std::vector<double> values;
};

struct MonteCarloConfig {
    std::uint64_t seed = 0;
    int n_samples = 50;
    double kappa = 1.0;
    double lambda0 = 5.0;
    double gamma = 0.0;
    double beta = 0.1;
    FeedbackLoopConfig loop;
    PerturbationSpec perturbation;
    DeltaBase delta_base = DeltaBase::perturbed_lambda;
    std::optional<SweepSpec> sweep;
    double omega_eval = 0.0;

    void validate() const {
        if (n_samples < 1) throw ParameterError("MonteCarloConfig: n_samples must be >= 1");
        perturbation.validate();
        loop.validate();
    }
};

/// Draw lambda = (1 + rel_lambda*e0) * lambda0 and detunings
/// delta_i = (1 + rel_delta*e_i) * lambda (or * lambda0, per base);
/// kappa and gamma are carried through unchanged.
inline PlantModel sample_perturbed_plant(const PlantModel& nominal, const PerturbationSpec& spec,
                                         const std::array<double, 3>& draws,
                                         DeltaBase base = DeltaBase::perturbed_lambda) {
    const double lambda = (1.0 + spec.rel_lambda * draws[0]) * nominal.lambda;
    const double delta_ref = base == DeltaBase::perturbed_lambda ? lambda : nominal.lambda;
    const double delta1 = (1.0 + spec.rel_delta * draws[1]) * delta_ref;
    const double delta2 = (1.0 + spec.rel_delta * draws[2]) * delta_ref;
    return build_ndpa(nominal.kappa, lambda, delta1, delta2, nominal.gamma);
}

struct SampleRecord {
    std::array<double, 3> epsilons{};
    double open_loop_gain = 0.0;
    double closed_loop_gain = 0.0;
    double a_open = 0.0;
    double a_fb = 0.0;
    bool plant_stable = false;
    bool closed_stable = false;

    bool included() const { return plant_stable && closed_stable; }
};

/// Population statistics over the included samples of one column.
struct SummaryStats {
    double mean = 0.0;
    double stddev = 0.0;
    double min = 0.0;
    double max = 0.0;
    int count = 0;
};

struct GroupSummary {
    SummaryStats open_gain, closed_gain, a_open, a_fb;
    int excluded = 0;
};

struct SweepPointResult {
    double value = 0.0;
    std::vector<SampleRecord> samples;
    GroupSummary summary;
};

struct MonteCarloResult {
    MonteCarloConfig config;
    std::string rng_name = kRngName;
    std::string rng_version = kRngVersion;
    bool is_sweep = false;
    std::vector<SampleRecord> per_sample;       // populated for robustness runs
    GroupSummary summary;                       // robustness summary
    std::vector<SweepPointResult> sweep_points; // populated for sweep runs
    double suppression_ratio = std::numeric_limits<double>::quiet_NaN();
    bool zero_spread = false;
};

namespace detail {

template <typename Getter>
inline SummaryStats column_stats(const std::vector<SampleRecord>& samples, Getter get) {
    SummaryStats s;
    s.min = std::numeric_limits<double>::infinity();
    s.max = -std::numeric_limits<double>::infinity();
    double sum = 0.0;
    for (const SampleRecord& r : samples) {
        if (!r.included()) continue;
        const double v = get(r);
        sum += v;
        s.min = std::min(s.min, v);
        s.max = std::max(s.max, v);
        ++s.count;
    }
    if (s.count == 0) {
        s.min = s.max = 0.0;
        return s;
    }
    s.mean = sum / s.count;
    double sq = 0.0;
    for (const SampleRecord& r : samples) {
        if (!r.included()) continue;
        const double d = get(r) - s.mean;
        sq += d * d;
    }
    s.stddev = std::sqrt(sq / s.count);
    return s;
}

inline GroupSummary summarize(const std::vector<SampleRecord>& samples) {
    GroupSummary g;
    g.open_gain = column_stats(samples, [](const SampleRecord& r) { return r.open_loop_gain; });
    g.closed_gain = column_stats(samples, [](const SampleRecord& r) { return r.closed_loop_gain; });
    g.a_open = column_stats(samples, [](const SampleRecord& r) { return r.a_open; });
    g.a_fb = column_stats(samples, [](const SampleRecord& r) { return r.a_fb; });
    g.excluded = static_cast<int>(samples.size()) - g.open_gain.count;
    return g;
}

inline std::array<double, 3> sample_epsilons(std::uint64_t seed, int sample_index) {
    SplitMix64 rng(seed ^ static_cast<std::uint64_t>(sample_index));
    return {rng.uniform_pm1(), rng.uniform_pm1(), rng.uniform_pm1()};
}

inline SampleRecord evaluate_sample(const MonteCarloConfig& config, double gamma,
                                    const FeedbackLoopConfig& loop, int sample_index) {
    const PlantModel nominal = build_ndpa(config.kappa, config.lambda0, config.lambda0,
                                          config.lambda0, gamma);
    SampleRecord rec;
    rec.epsilons = sample_epsilons(config.seed, sample_index);
    const PlantModel plant =
        sample_perturbed_plant(nominal, config.perturbation, rec.epsilons, config.delta_base);
    const ControllerModel controller = build_beam_splitter(config.beta);
    const ClosedLoopSystem closed = close_lossy_feedback(plant, controller, loop);

    const Complex s(0.0, config.omega_eval);
    rec.open_loop_gain = std::abs(plant.matrix.at(0, 0).eval(s));
    rec.closed_loop_gain = std::abs(closed.b1("b1").eval(s));
    rec.a_open = added_noise(plant, config.omega_eval, NoiseFlavor::plant).a_value;
    rec.a_fb = added_noise(closed, config.omega_eval, NoiseFlavor::closed_loop).a_value;
    rec.plant_stable = stability(plant).stable;
    rec.closed_stable = stability(closed).stable;
    return rec;
}

}  // namespace detail

/// Gain-robustness ensemble: per sample, the uncontrolled gain |G11| and the
/// controlled gain |G11_fb| at omega_eval, under the configured loop losses.
/// Unstable samples are flagged and excluded from the summary (never
/// resampled, so sample counts stay auditable).
///
/// suppression_ratio compares the *relative* spreads of the two gains,
/// (std/mean)(closed) / (std/mean)(open); a zero open-loop spread makes the
/// ratio NaN with zero_spread set.
inline MonteCarloResult run_robustness_experiment(const MonteCarloConfig& config) {
    config.validate();
    if (config.sweep)
        throw ParameterError("run_robustness_experiment: config carries a sweep; use run_noise_experiment");

    const PlantModel nominal = build_ndpa(config.kappa, config.lambda0, config.lambda0,
                                          config.lambda0, config.gamma);
    const ClosedLoopSystem nominal_closed =
        close_lossy_feedback(nominal, build_beam_splitter(config.beta), config.loop);
    if (!stability(nominal_closed).stable)
        throw ExperimentError("run_robustness_experiment: nominal closed loop is unstable");

    MonteCarloResult result;
    result.config = config;
    result.per_sample.reserve(config.n_samples);
    for (int i = 0; i < config.n_samples; ++i)
        result.per_sample.push_back(detail::evaluate_sample(config, config.gamma, config.loop, i));
    result.summary = detail::summarize(result.per_sample);
    if (result.summary.open_gain.count == 0)
        throw ExperimentError("run_robustness_experiment: every sample was unstable");

    const SummaryStats& o = result.summary.open_gain;
    const SummaryStats& c = result.summary.closed_gain;
    if (o.stddev == 0.0 || o.mean == 0.0 || c.mean == 0.0) {
        result.zero_spread = true;  // suppression_ratio stays NaN
    } else {
        result.suppression_ratio = (c.stddev / std::abs(c.mean)) / (o.stddev / std::abs(o.mean));
    }
    return result;
}

/// Added-noise ensemble along a sweep axis: per sweep point and per sample,
/// the plant noise A_o and the controlled noise A_fb at omega_eval. The same
/// per-sample epsilon draws are reused at every sweep point.
inline MonteCarloResult run_noise_experiment(const MonteCarloConfig& config) {
    config.validate();
    if (!config.sweep || config.sweep->values.empty())
        throw ParameterError("run_noise_experiment: sweep axis must be nonempty");

    MonteCarloResult result;
    result.config = config;
    result.is_sweep = true;
    bool any_included = false;
    for (double v : config.sweep->values) {
        SweepPointResult point;
        point.value = v;
        const double gamma = config.sweep->axis == SweepSpec::Axis::gamma ? v : config.gamma;
        FeedbackLoopConfig loop = config.loop;
        if (config.sweep->axis == SweepSpec::Axis::alpha) loop = FeedbackLoopConfig{v, v};
        point.samples.reserve(config.n_samples);
        for (int i = 0; i < config.n_samples; ++i)
            point.samples.push_back(detail::evaluate_sample(config, gamma, loop, i));
        point.summary = detail::summarize(point.samples);
        any_included = any_included || point.summary.a_fb.count > 0;
        result.sweep_points.push_back(std::move(point));
    }
    if (!any_included)
        throw ExperimentError("run_noise_experiment: every sample was unstable");
    return result;
}

}  // namespace qfa
