#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "qfa/errors.hpp"
#include "qfa/models.hpp"

namespace qfa {

/// Transmissivities of the two feedback transmission lines. alpha = 1 models
/// an ideal (lossless) line; the reflectivities delta_i = sqrt(1 - alpha_i^2)
/// couple in the line noises d5†, d6†.
struct FeedbackLoopConfig {
    double alpha1 = 1.0;
    double alpha2 = 1.0;

    double delta1_bs() const { return std::sqrt(1.0 - alpha1 * alpha1); }
    double delta2_bs() const { return std::sqrt(1.0 - alpha2 * alpha2); }

    void validate() const {
        if (alpha1 <= 0.0 || alpha1 > 1.0 || alpha2 <= 0.0 || alpha2 > 1.0)
            throw ParameterError("FeedbackLoopConfig: alpha1, alpha2 must lie in (0, 1]");
    }
};

/// Result of closing the loop b3† = α1 b̃2† + δ1 d5†, b2† = α2 b̃4† + δ2 d6†
/// around a plant and a passive controller.
///
/// b1_row maps each input (b1, b4†, d3, d4†, d5†, d6†; absent inputs omitted)
/// to its transfer function into the amplified output b̃1. b3_row is the same
/// map into the auxiliary output b̃3†, the phase-conjugating path.
///
/// With 𝐆 = 1 - α1 α2 K21 G22, the b1_row entries are
///   b1 : [G11 - α1α2 K21 (G11 G22 - G12 G21)] / 𝐆
///   b4†: α2 G12 K22 / 𝐆
///   d3 : [G13 - α1α2 K21 (G13 G22 - G12 G23)] / 𝐆
///   d4†: α2 G12 K23 / 𝐆
///   d5†: α2 δ1 G12 K21 / 𝐆
///   d6†: δ2 G12 / 𝐆
/// and the b3_row entries (obtained by eliminating the internal ports; they
/// reduce to the familiar 2x2 forms when α1 = α2 = 1) are
///   b1 : α1 K11 G21 / 𝐆
///   b4†: [K12 + α1α2 G22 (K11 K22 - K12 K21)] / 𝐆
///   d3 : α1 K11 G23 / 𝐆
///   d4†: [K13 + α1α2 G22 (K11 K23 - K13 K21)] / 𝐆
///   d5†: δ1 K11 / 𝐆
///   d6†: α1 δ2 K11 G22 / 𝐆
///
/// Poles are the roots of the cleared numerator of 𝐆 combined with the plant
/// poles, and are cached at construction.
struct ClosedLoopSystem {
    std::vector<std::pair<Port, RationalFunction>> b1_row;
    std::vector<std::pair<Port, RationalFunction>> b3_row;
    std::vector<Complex> poles;

    const RationalFunction* find_b1(const std::string& input_name) const {
        for (const auto& [port, rf] : b1_row)
            if (port.name == input_name) return &rf;
        return nullptr;
    }
    const RationalFunction& b1(const std::string& input_name) const {
        if (const RationalFunction* rf = find_b1(input_name)) return *rf;
        throw ParameterError("ClosedLoopSystem: no b1-row entry for input " + input_name);
    }
    const RationalFunction* find_b3(const std::string& input_name) const {
        for (const auto& [port, rf] : b3_row)
            if (port.name == input_name) return &rf;
        return nullptr;
    }
    const RationalFunction& b3(const std::string& input_name) const {
        if (const RationalFunction* rf = find_b3(input_name)) return *rf;
        throw ParameterError("ClosedLoopSystem: no b3-row entry for input " + input_name);
    }
};

/// Close the feedback loop around a plant (2x2 or 2x3 with loss column) and a
/// passive controller (2x2 or 2x3 with noise column), with lossy transmission
/// lines. Missing noise columns are treated as zero. The lossless limit
/// alpha1 = alpha2 = 1 reproduces the ideal closure exactly.
inline ClosedLoopSystem close_lossy_feedback(const PlantModel& plant,
                                             const ControllerModel& controller,
                                             const FeedbackLoopConfig& loop) {
    loop.validate();
    const double a1 = loop.alpha1, a2 = loop.alpha2;
    const double d1 = loop.delta1_bs(), d2 = loop.delta2_bs();

    const RationalFunction& G11 = plant.matrix.at(0, 0);
    const RationalFunction& G12 = plant.matrix.at(0, 1);
    const RationalFunction& G21 = plant.matrix.at(1, 0);
    const RationalFunction& G22 = plant.matrix.at(1, 1);
    const bool plant_lossy = plant.has_loss_port();
    const RationalFunction G13 = plant_lossy ? plant.matrix.at(0, 2) : RationalFunction();
    const RationalFunction G23 = plant_lossy ? plant.matrix.at(1, 2) : RationalFunction();

    const RationalFunction& K11 = controller.matrix.at(0, 0);
    const RationalFunction& K12 = controller.matrix.at(0, 1);
    const RationalFunction& K21 = controller.matrix.at(1, 0);
    const RationalFunction& K22 = controller.matrix.at(1, 1);
    const bool ctrl_noisy = controller.has_noise_port();
    const RationalFunction K13 = ctrl_noisy ? controller.matrix.at(0, 2) : RationalFunction();
    const RationalFunction K23 = ctrl_noisy ? controller.matrix.at(1, 2) : RationalFunction();

    const RationalFunction a1a2(a1 * a2);
    const RationalFunction loop_gain = a1a2 * K21 * G22;
    const RationalFunction G = RationalFunction(1.0) - loop_gain;
    if (G.is_zero())
        throw DegeneracyError("close_lossy_feedback: 1 - a1*a2*K21*G22 vanishes identically");

    auto entry = [&](const RationalFunction& num) { return simplified(num / G); };

    ClosedLoopSystem sys;
    sys.b1_row.emplace_back(ann("b1"), entry(G11 - a1a2 * K21 * (G11 * G22 - G12 * G21)));
    sys.b1_row.emplace_back(cre("b4"), entry(RationalFunction(a2) * G12 * K22));
    sys.b3_row.emplace_back(ann("b1"), entry(RationalFunction(a1) * K11 * G21));
    sys.b3_row.emplace_back(
        cre("b4"), entry(K12 + a1a2 * G22 * (K11 * K22 - K12 * K21)));
    if (plant_lossy) {
        sys.b1_row.emplace_back(ann("d3"), entry(G13 - a1a2 * K21 * (G13 * G22 - G12 * G23)));
        sys.b3_row.emplace_back(ann("d3"), entry(RationalFunction(a1) * K11 * G23));
    }
    if (ctrl_noisy) {
        sys.b1_row.emplace_back(cre("d4"), entry(RationalFunction(a2) * G12 * K23));
        sys.b3_row.emplace_back(cre("d4"),
                                entry(K13 + a1a2 * G22 * (K11 * K23 - K13 * K21)));
    }
    if (d1 != 0.0) {
        sys.b1_row.emplace_back(cre("d5"), entry(RationalFunction(a2 * d1) * G12 * K21));
        sys.b3_row.emplace_back(cre("d5"), entry(RationalFunction(d1) * K11));
    }
    if (d2 != 0.0) {
        sys.b1_row.emplace_back(cre("d6"), entry(RationalFunction(d2) * G12));
        sys.b3_row.emplace_back(cre("d6"), entry(RationalFunction(a1 * d2) * K11 * G22));
    }

    // Closed-loop poles: roots of the cleared numerator of 𝐆, plus the plant
    // poles (which cover the open-loop limit where 𝐆 is constant).
    if (G.num().degree() >= 1) sys.poles = poly_roots(G.num());
    std::vector<Complex> plant_poles = plant.poles();
    sys.poles.insert(sys.poles.end(), plant_poles.begin(), plant_poles.end());
    detail::sort_roots(sys.poles);
    return sys;
}

/// Ideal loop closure: lossless lines, 2x2 plant and controller.
inline ClosedLoopSystem close_ideal_feedback(const PlantModel& plant,
                                             const ControllerModel& controller) {
    if (plant.has_loss_port())
        throw ParameterError("close_ideal_feedback: plant must be 2x2 (gamma = 0)");
    if (controller.has_noise_port())
        throw ParameterError("close_ideal_feedback: controller must be 2x2");
    return close_lossy_feedback(plant, controller, FeedbackLoopConfig{1.0, 1.0});
}

/// Closed form of the controlled gain for the detuned plant under a beam
/// splitter:
///   G11_fb(s) = [(1-b)s^2 + b*k*s - (1+b)k^2/4 + i*k*l]
///             / [(1-b)s^2 +   k*s + (1+b)k^2/4 + i*b*k*l].
inline RationalFunction closed_form_detuned_fb(double kappa, double lambda, double beta) {
    if (kappa <= 0.0) throw ParameterError("closed_form_detuned_fb: kappa must be positive");
    if (std::abs(beta) >= 1.0) throw ParameterError("closed_form_detuned_fb: |beta| must be < 1");

    const double k2_4 = kappa * kappa / 4;
    const ComplexPoly num({Complex(-(1 + beta) * k2_4, kappa * lambda), Complex(beta * kappa),
                           Complex(1 - beta)});
    const ComplexPoly den({Complex((1 + beta) * k2_4, beta * kappa * lambda), Complex(kappa),
                           Complex(1 - beta)});
    return RationalFunction(num, den);
}

/// |G21_fb(i*omega)|: gain of the phase-conjugating output b̃3† against the
/// conjugated input. Approaches sqrt(1/|K21|^2 - 1) in the large-gain limit.
inline double phase_conjugating_gain(const ClosedLoopSystem& system, double omega) {
    return std::abs(system.b3("b1").eval(Complex(0.0, omega)));
}

/// The textbook feedback rule G / (1 + G K) for real scalar gains.
inline double classical_feedback_gain(double G, double K) {
    const double den = 1.0 + G * K;
    if (den == 0.0) throw DegeneracyError("classical_feedback_gain: 1 + G*K = 0");
    return G / den;
}

}  // namespace qfa
