#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <utility>
#include <vector>

#include "qfa/errors.hpp"
#include "qfa/rational_matrix.hpp"

namespace qfa {

/// Two-mode parametric amplifier cavity. The 2x2 transfer block maps
/// (b1, b2†) to (b̃1, b̃2†); with signal loss (gamma > 0) a third input
/// column d3 is added. Entries are exact rational functions of s sharing the
/// characteristic polynomial
///   D(s) = (s + kappa/2 + gamma/2 + i*delta1)(s + kappa/2 - i*delta2) - lambda^2.
struct PlantModel {
    double kappa = 1.0;
    double lambda = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double gamma = 0.0;
    RationalMatrix matrix;
    ComplexPoly char_poly;  // D(s), denominator shared by every entry

    bool has_loss_port() const { return matrix.cols() == 3; }

    std::vector<Complex> poles() const { return poly_roots(char_poly); }
};

/// Passive feedback controller mapping (b3†, b4†[, d4†]) to (b̃3†, b̃4†).
/// Only creation-flavored modes appear; the frequency response has
/// orthonormal rows (K K† = I) on the imaginary axis.
struct ControllerModel {
    enum class Kind { beam_splitter, passive_tf };

    Kind kind = Kind::beam_splitter;
    double alpha = 1.0;  // beam splitter transmissivity (alpha^2 + beta^2 = 1)
    double beta = 0.0;   // beam splitter reflectivity; K21 = beta
    RationalMatrix matrix;

    bool has_noise_port() const { return matrix.cols() == 3; }
};

/// Residuals of the scattering identities on a frequency grid.
struct ConstraintReport {
    struct Row {
        double omega;
        std::vector<double> residuals;  // one per identity, same order as identity_names
    };
    std::vector<std::string> identity_names;
    std::vector<Row> rows;
    double max_residual = 0.0;
    double tol = 0.0;
    bool pass = false;
};

namespace detail {

inline std::pair<ComplexPoly, ComplexPoly> cavity_lines(double kappa, double delta1, double delta2,
                                                        double gamma) {
    // p1 multiplies a1 in the signal line, p2 multiplies a2† in the idler line.
    const ComplexPoly s = ComplexPoly::variable();
    const ComplexPoly p1 = s + ComplexPoly(Complex(kappa / 2 + gamma / 2, delta1));
    const ComplexPoly p2 = s + ComplexPoly(Complex(kappa / 2, -delta2));
    return {p1, p2};
}

}  // namespace detail

/// Build the amplifier from its physical parameters, by Laplace-transforming
/// the two Langevin lines and the output relations. With gamma > 0 the signal
/// line gains the loss term and the matrix gains the d3 column.
inline PlantModel build_ndpa(double kappa, double lambda, double delta1, double delta2,
                             double gamma) {
    if (kappa <= 0.0) throw ParameterError("build_ndpa: kappa must be positive");
    if (gamma < 0.0) throw ParameterError("build_ndpa: gamma must be nonnegative");

    auto [p1, p2] = detail::cavity_lines(kappa, delta1, delta2, gamma);
    const ComplexPoly lam2(Complex(lambda * lambda));
    const ComplexPoly D = p1 * p2 - lam2;

    const ComplexPoly kap(Complex(kappa));
    const RationalFunction g11((p1 - kap) * p2 - lam2, D);
    const RationalFunction g12(ComplexPoly(Complex(-kappa * lambda)), D);
    const RationalFunction g21 = g12;
    const RationalFunction g22(p1 * (p2 - kap) - lam2, D);

    std::vector<Port> rows = {ann("b1"), cre("b2")};
    std::vector<Port> cols = {ann("b1"), cre("b2")};
    std::vector<std::vector<RationalFunction>> entries;
    if (gamma > 0.0) {
        const double root_kg = std::sqrt(kappa * gamma);
        const RationalFunction g13(ComplexPoly(Complex(-root_kg)) * p2, D);
        const RationalFunction g23(ComplexPoly(Complex(-lambda * root_kg)), D);
        cols.push_back(ann("d3"));
        entries = {{g11, g12, g13}, {g21, g22, g23}};
    } else {
        entries = {{g11, g12}, {g21, g22}};
    }

    return PlantModel{kappa, lambda, delta1, delta2, gamma,
                      RationalMatrix(std::move(entries), std::move(rows), std::move(cols)), D};
}

/// The broadband variant: detunings locked to the coupling strength,
/// delta1 = delta2 = lambda. Uses the closed form
///   G(s) = [[s^2 - kappa^2/4 + i*kappa*lambda, -kappa*lambda],
///           [-kappa*lambda, s^2 - kappa^2/4 - i*kappa*lambda]] / (s + kappa/2)^2,
/// whose double pole sits at -kappa/2 regardless of lambda.
inline PlantModel build_detuned_ndpa(double kappa, double lambda) {
    if (kappa <= 0.0) throw ParameterError("build_detuned_ndpa: kappa must be positive");

    const ComplexPoly s = ComplexPoly::variable();
    const ComplexPoly half(Complex(kappa / 2));
    const ComplexPoly D = (s + half) * (s + half);
    const ComplexPoly s2_base = s * s - ComplexPoly(Complex(kappa * kappa / 4));
    const ComplexPoly ikl(Complex(0.0, kappa * lambda));

    const RationalFunction g11(s2_base + ikl, D);
    const RationalFunction g12(ComplexPoly(Complex(-kappa * lambda)), D);
    const RationalFunction g22(s2_base - ikl, D);

    std::vector<std::vector<RationalFunction>> entries = {{g11, g12}, {g12, g22}};
    return PlantModel{kappa, lambda, lambda, lambda, 0.0,
                      RationalMatrix(std::move(entries), {ann("b1"), cre("b2")},
                                     {ann("b1"), cre("b2")}),
                      D};
}

/// Static beam-splitter controller [[alpha, beta], [beta, -alpha]] with
/// alpha = +sqrt(1 - beta^2). K21 = beta is the attenuation level; beta = 0
/// disables the feedback path.
inline ControllerModel build_beam_splitter(double beta) {
    if (std::abs(beta) > 1.0) throw ParameterError("build_beam_splitter: |beta| must be <= 1");
    const double alpha = std::sqrt(1.0 - beta * beta);

    std::vector<std::vector<RationalFunction>> entries = {
        {RationalFunction(alpha), RationalFunction(beta)},
        {RationalFunction(beta), RationalFunction(-alpha)}};
    return ControllerModel{ControllerModel::Kind::beam_splitter, alpha, beta,
                           RationalMatrix(std::move(entries), {cre("b3"), cre("b4")},
                                          {cre("b3"), cre("b4"), })};
}

/// Wrap an explicit passive frequency response (2x2, or 2x3 with a noise
/// column d4) as a controller. Row orthonormality K(iw) K(iw)† = I is
/// verified on the supplied grid; violations are parameter errors.
inline ControllerModel make_passive_controller(RationalMatrix matrix,
                                               const std::vector<double>& grid,
                                               double tol = 1e-9) {
    if (matrix.rows() != 2 || (matrix.cols() != 2 && matrix.cols() != 3))
        throw ParameterError("make_passive_controller: expected a 2x2 or 2x3 matrix");
    for (double w : grid) {
        const Eigen::MatrixXcd k = matrix.eval_at(Complex(0.0, w));
        const Eigen::MatrixXcd r = k * k.adjoint() - Eigen::MatrixXcd::Identity(2, 2);
        if (r.cwiseAbs().maxCoeff() > tol)
            throw ParameterError("make_passive_controller: matrix is not passive on the grid");
    }
    const Complex k11 = matrix.at(0, 0).is_constant() ? matrix.at(0, 0).eval(Complex(0.0)) : Complex(0.0);
    const Complex k21 = matrix.at(1, 0).is_constant() ? matrix.at(1, 0).eval(Complex(0.0)) : Complex(0.0);
    return ControllerModel{ControllerModel::Kind::passive_tf, std::abs(k11), std::abs(k21),
                           std::move(matrix)};
}

/// Evaluate the applicable scattering identities on the grid.
///
/// For mixed-flavor amplifier matrices the identities are (lossless 2x2)
///   |G11|^2 - |G12|^2 = 1,   |G22|^2 - |G21|^2 = 1,   G21 G11* - G22 G12* = 0
/// and, with the loss column present,
///   |G11|^2 - |G12|^2 + |G13|^2 = 1,
///   |G22|^2 - |G21|^2 - |G23|^2 = 1,
///   G21 G11* - G22 G12* + G23 G13* = 0.
/// For an all-creation (controller) matrix the single identity is row
/// orthonormality, max |K K† - I|.
inline ConstraintReport check_scattering_constraints(const RationalMatrix& m,
                                                     const std::vector<double>& grid, double tol) {
    if (grid.empty()) throw ParameterError("check_scattering_constraints: empty frequency grid");
    if (m.rows() != 2 || (m.cols() != 2 && m.cols() != 3))
        throw ParameterError("check_scattering_constraints: expected a 2x2 or 2x3 matrix");

    bool all_creation = true;
    for (const Port& p : m.row_ports()) all_creation = all_creation && p.is_creation();
    for (const Port& p : m.col_ports()) all_creation = all_creation && p.is_creation();

    ConstraintReport report;
    report.tol = tol;
    const bool lossy = m.cols() == 3;
    if (all_creation) {
        report.identity_names = {"row_orthonormality"};
    } else if (lossy) {
        report.identity_names = {"|G11|^2-|G12|^2+|G13|^2=1", "|G22|^2-|G21|^2-|G23|^2=1",
                                 "G21*conj(G11)-G22*conj(G12)+G23*conj(G13)=0"};
    } else {
        report.identity_names = {"|G11|^2-|G12|^2=1", "|G22|^2-|G21|^2=1",
                                 "G21*conj(G11)-G22*conj(G12)=0"};
    }

    double worst = 0.0;
    for (double w : grid) {
        Eigen::MatrixXcd g;
        try {
            g = m.eval_at(Complex(0.0, w));
        } catch (const PoleEvaluationError&) {
            throw PoleEvaluationError(
                "check_scattering_constraints: pole on the grid at omega = " + std::to_string(w),
                Complex(0.0, w));
        }
        ConstraintReport::Row row;
        row.omega = w;
        if (all_creation) {
            const Eigen::MatrixXcd r = g * g.adjoint() - Eigen::MatrixXcd::Identity(2, 2);
            row.residuals.push_back(r.cwiseAbs().maxCoeff());
        } else {
            const double a11 = std::norm(g(0, 0)), a12 = std::norm(g(0, 1));
            const double a21 = std::norm(g(1, 0)), a22 = std::norm(g(1, 1));
            const double a13 = lossy ? std::norm(g(0, 2)) : 0.0;
            const double a23 = lossy ? std::norm(g(1, 2)) : 0.0;
            Complex cross = g(1, 0) * std::conj(g(0, 0)) - g(1, 1) * std::conj(g(0, 1));
            if (lossy) cross += g(1, 2) * std::conj(g(0, 2));
            row.residuals = {std::abs(a11 - a12 + a13 - 1.0), std::abs(a22 - a21 - a23 - 1.0),
                             std::abs(cross)};
        }
        for (double r : row.residuals) worst = std::max(worst, r);
        report.rows.push_back(std::move(row));
    }
    report.max_residual = worst;
    report.pass = worst <= tol;
    return report;
}

}  // namespace qfa
