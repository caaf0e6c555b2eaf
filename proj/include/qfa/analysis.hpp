#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "qfa/errors.hpp"
#include "qfa/interconnect.hpp"
#include "qfa/models.hpp"

namespace qfa {

/// Pole-placement verdict. stable <=> max Re(pole) < -margin; poles whose
/// real part lies within the margin band are conservatively reported unstable
/// with the marginal flag set.
struct StabilityVerdict {
    std::vector<Complex> poles;
    double max_real_part = 0.0;
    bool stable = false;
    bool marginal = false;
    double margin = 0.0;
};

inline StabilityVerdict stability(std::vector<Complex> poles, double margin = 1e-9) {
    if (poles.empty()) throw ParameterError("stability: no poles supplied");
    double max_re = -std::numeric_limits<double>::infinity();
    for (const Complex& p : poles) max_re = std::max(max_re, p.real());
    StabilityVerdict v;
    v.poles = std::move(poles);
    v.max_real_part = max_re;
    v.margin = margin;
    v.stable = max_re < -margin;
    v.marginal = std::abs(max_re) <= margin;
    return v;
}

inline StabilityVerdict stability(const PlantModel& plant, double margin = 1e-9) {
    return stability(plant.poles(), margin);
}

inline StabilityVerdict stability(const ClosedLoopSystem& system, double margin = 1e-9) {
    return stability(system.poles, margin);
}

/// Largest |lambda| keeping the beam-splitter-controlled detuned amplifier
/// stable:  lambda_max = (kappa/2) * sqrt((1+beta) / (beta^2 (1-beta))).
/// beta = 0 leaves the loop open and the bound is +infinity. For small beta
/// this reduces to |beta| < kappa / (2 |lambda|).
inline double detuned_stability_threshold(double kappa, double beta) {
    if (kappa <= 0.0) throw ParameterError("detuned_stability_threshold: kappa must be positive");
    if (std::abs(beta) >= 1.0)
        throw ParameterError("detuned_stability_threshold: |beta| must be < 1");
    if (beta == 0.0) return std::numeric_limits<double>::infinity();
    return 0.5 * kappa * std::sqrt((1.0 + beta) / (beta * beta * (1.0 - beta)));
}

/// Complex frequency response samples on a uniform grid.
struct GainCurve {
    std::vector<double> omegas;
    std::vector<Complex> values;

    std::vector<double> gain_db() const {
        std::vector<double> out(values.size());
        for (std::size_t i = 0; i < values.size(); ++i) out[i] = 20.0 * std::log10(std::abs(values[i]));
        return out;
    }
    std::vector<double> phase_deg_raw() const {
        std::vector<double> out(values.size());
        for (std::size_t i = 0; i < values.size(); ++i)
            out[i] = std::arg(values[i]) * 180.0 / M_PI;
        return out;
    }
    /// Unwrapped along the grid: each sample shifted by the multiple of 360
    /// degrees closest to its predecessor.
    std::vector<double> phase_deg() const {
        std::vector<double> out = phase_deg_raw();
        for (std::size_t i = 1; i < out.size(); ++i)
            out[i] -= 360.0 * std::round((out[i] - out[i - 1]) / 360.0);
        return out;
    }
};

inline GainCurve sample_response(const RationalFunction& rf, double omega_min, double omega_max,
                                 int n_points) {
    if (n_points < 2) throw ParameterError("gain_profile: need at least 2 grid points");
    if (!(omega_min < omega_max)) throw ParameterError("gain_profile: omega_min must be < omega_max");
    GainCurve curve;
    curve.omegas.resize(n_points);
    curve.values.resize(n_points);
    const double step = (omega_max - omega_min) / (n_points - 1);
    for (int i = 0; i < n_points; ++i) {
        const double w = omega_min + step * i;
        curve.omegas[i] = w;
        curve.values[i] = rf.eval(Complex(0.0, w));
    }
    return curve;
}

/// Amplification gain G11 of the plant on a uniform grid.
inline GainCurve gain_profile(const PlantModel& plant, double omega_min, double omega_max,
                              int n_points) {
    return sample_response(plant.matrix.at(0, 0), omega_min, omega_max, n_points);
}

/// Controlled gain G11_fb of a closed loop on a uniform grid.
inline GainCurve gain_profile(const ClosedLoopSystem& system, double omega_min, double omega_max,
                              int n_points) {
    return sample_response(system.b1("b1"), omega_min, omega_max, n_points);
}

/// Half-width of the curve's peak: distance from the grid maximum to the
/// first frequency (scanning away from the peak, right side preferred) where
/// the gain has fallen drop_db below it, linearly interpolated between grid
/// points. Throws RangeError when the peak is not interior or the curve never
/// falls that far within the sampled range.
inline double effective_bandwidth(const GainCurve& curve, double drop_db = 3.0) {
    if (drop_db <= 0.0) throw ParameterError("effective_bandwidth: drop_db must be positive");
    const std::vector<double> db = curve.gain_db();
    if (db.size() < 3) throw RangeError("effective_bandwidth: curve too short");

    const std::size_t peak =
        static_cast<std::size_t>(std::max_element(db.begin(), db.end()) - db.begin());
    if (peak == 0 || peak + 1 == db.size())
        throw RangeError("effective_bandwidth: curve has no interior maximum");
    const double target = db[peak] - drop_db;

    auto cross = [&](bool rightward) -> double {
        const std::ptrdiff_t dir = rightward ? 1 : -1;
        for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(peak) + dir;
             i >= 0 && i < static_cast<std::ptrdiff_t>(db.size()); i += dir) {
            if (db[i] < target) {
                const std::ptrdiff_t prev = i - dir;
                const double frac = (db[prev] - target) / (db[prev] - db[i]);
                const double w = curve.omegas[prev] + frac * (curve.omegas[i] - curve.omegas[prev]);
                return std::abs(w - curve.omegas[peak]);
            }
        }
        return std::numeric_limits<double>::quiet_NaN();
    };

    const double right = cross(true);
    if (!std::isnan(right)) return right;
    const double left = cross(false);
    if (!std::isnan(left)) return left;
    throw RangeError("effective_bandwidth: gain never falls drop_db below the peak in range");
}

/// Which added-noise expression to evaluate.
enum class NoiseFlavor { ideal, plant, closed_loop };

/// Added noise referred to the input, with its three-term decomposition
///   a_value = 1/2 - 1/(2|G11|^2) + |G13|^2/|G11|^2
/// (the excess term vanishes without a loss column). All noise ports are
/// taken to be vacuum.
struct NoiseReport {
    double omega = 0.0;
    double a_value = 0.0;
    double half_term = 0.0;
    double gain_term = 0.0;
    double excess_term = 0.0;
    NoiseFlavor flavor = NoiseFlavor::ideal;
};

namespace detail {

inline NoiseReport noise_from_entries(double omega, double gain_sq, double excess_sq,
                                      NoiseFlavor flavor) {
    if (gain_sq < 1e-30)
        throw DegeneracyError("added_noise: |G11| vanishes at the requested frequency");
    NoiseReport r;
    r.omega = omega;
    r.flavor = flavor;
    r.half_term = 0.5;
    r.gain_term = -0.5 / gain_sq;
    r.excess_term = flavor == NoiseFlavor::ideal ? 0.0 : excess_sq / gain_sq;
    r.a_value = r.half_term + r.gain_term + r.excess_term;
    return r;
}

}  // namespace detail

inline NoiseReport added_noise(const PlantModel& plant, double omega,
                               NoiseFlavor flavor = NoiseFlavor::plant) {
    if (flavor == NoiseFlavor::closed_loop)
        throw ParameterError("added_noise: closed_loop flavor needs a ClosedLoopSystem");
    const Complex s(0.0, omega);
    const double gain_sq = std::norm(plant.matrix.at(0, 0).eval(s));
    const double excess_sq =
        plant.has_loss_port() ? std::norm(plant.matrix.at(0, 2).eval(s)) : 0.0;
    return detail::noise_from_entries(omega, gain_sq, excess_sq, flavor);
}

inline NoiseReport added_noise(const ClosedLoopSystem& system, double omega,
                               NoiseFlavor flavor = NoiseFlavor::closed_loop) {
    if (flavor == NoiseFlavor::plant)
        throw ParameterError("added_noise: plant flavor needs a PlantModel");
    const Complex s(0.0, omega);
    const double gain_sq = std::norm(system.b1("b1").eval(s));
    const RationalFunction* d3 = system.find_b1("d3");
    const double excess_sq = d3 ? std::norm(d3->eval(s)) : 0.0;
    return detail::noise_from_entries(omega, gain_sq, excess_sq, flavor);
}

/// Worst-case factor by which the loop suppresses relative gain fluctuations:
/// 1 / |1 - K21(iw) G22(iw)|. Equals 1 with the loop open (no suppression).
inline double sensitivity_bound(const PlantModel& plant, const ControllerModel& controller,
                                double omega) {
    if (plant.has_loss_port() || controller.has_noise_port())
        throw ParameterError("sensitivity_bound: expects an ideal 2x2 closure");
    const Complex s(0.0, omega);
    const Complex loop = controller.matrix.at(1, 0).eval(s) * plant.matrix.at(1, 1).eval(s);
    const Complex den = Complex(1.0) - loop;
    if (std::abs(den) < 1e-30)
        throw DegeneracyError("sensitivity_bound: 1 - K21*G22 vanishes at this frequency");
    return 1.0 / std::abs(den);
}

/// First-order prediction of the normalized controlled-gain fluctuation
/// d|G11_fb| / |G11_fb| caused by a plant fluctuation dG22:
///   (1 - |K21|^2) / |G22* - K21|^2 * Re[ (G22* - K21) / (1 - K21 G22) * dG22 ].
inline double first_order_gain_fluctuation(Complex G22, Complex K21, Complex dG22) {
    const Complex num = std::conj(G22) - K21;
    const Complex den = Complex(1.0) - K21 * G22;
    if (std::abs(den) < 1e-30)
        throw DegeneracyError("first_order_gain_fluctuation: 1 - K21*G22 = 0");
    if (std::abs(num) < 1e-30)
        throw DegeneracyError("first_order_gain_fluctuation: G22* - K21 = 0");
    const double factor = (1.0 - std::norm(K21)) / std::norm(num);
    return factor * (num / den * dG22).real();
}

/// Loop gain K21(iw) G22(iw) sampled on an explicit grid, for Bode-style
/// magnitude/phase synthesis of the controller.
inline GainCurve loop_gain_bode(const PlantModel& plant, const ControllerModel& controller,
                                const std::vector<double>& grid) {
    if (grid.empty()) throw ParameterError("loop_gain_bode: empty grid");
    GainCurve curve;
    curve.omegas = grid;
    curve.values.reserve(grid.size());
    const RationalFunction& K21 = controller.matrix.at(1, 0);
    const RationalFunction& G22 = plant.matrix.at(1, 1);
    for (double w : grid) {
        const Complex s(0.0, w);
        curve.values.push_back(K21.eval(s) * G22.eval(s));
    }
    return curve;
}

}  // namespace qfa
