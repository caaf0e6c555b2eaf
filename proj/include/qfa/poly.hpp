#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <initializer_list>
#include <limits>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include "qfa/errors.hpp"

namespace qfa {

using Complex = std::complex<double>;

/// Univariate polynomial in the Laplace variable s with complex coefficients,
/// stored in ascending degree. All rates are dimensionless (units of a
/// reference decay rate, so s and omega are likewise dimensionless).
///
/// Canonical form: trailing zero coefficients are trimmed, so the leading
/// coefficient is nonzero unless the polynomial is identically zero (which is
/// stored as the single coefficient 0).
class ComplexPoly {
public:
    ComplexPoly() : coeffs_{Complex(0.0)} {}
    ComplexPoly(double c) : coeffs_{Complex(c)} { trim(); }
    ComplexPoly(Complex c) : coeffs_{c} { trim(); }
    explicit ComplexPoly(std::vector<Complex> coeffs) : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty()) coeffs_.push_back(Complex(0.0));
        trim();
    }
    ComplexPoly(std::initializer_list<Complex> coeffs) : coeffs_(coeffs) {
        if (coeffs_.empty()) coeffs_.push_back(Complex(0.0));
        trim();
    }

    /// The monomial s.
    static ComplexPoly variable() { return ComplexPoly({Complex(0.0), Complex(1.0)}); }

    /// leading * prod_k (s - roots[k])
    static ComplexPoly from_roots(const std::vector<Complex>& roots, Complex leading = 1.0) {
        ComplexPoly p(leading);
        for (const Complex& r : roots) p = p * ComplexPoly({-r, Complex(1.0)});
        return p;
    }

    const std::vector<Complex>& coeffs() const { return coeffs_; }
    int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
    bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == Complex(0.0); }
    Complex leading() const { return coeffs_.back(); }

    /// Horner evaluation.
    Complex eval(Complex s) const {
        Complex acc(0.0);
        for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) acc = acc * s + *it;
        return acc;
    }

    ComplexPoly derivative() const {
        if (degree() < 1) return ComplexPoly();
        std::vector<Complex> d(coeffs_.size() - 1);
        for (std::size_t k = 1; k < coeffs_.size(); ++k) d[k - 1] = double(k) * coeffs_[k];
        return ComplexPoly(std::move(d));
    }

    /// sum_k |c_k| * max(1,r)^k — scale factor for residual tests at radius r.
    double magnitude_bound(double r) const {
        const double base = std::max(1.0, r);
        double scale = 0.0, pw = 1.0;
        for (const Complex& c : coeffs_) {
            scale += std::abs(c) * pw;
            pw *= base;
        }
        return scale;
    }

    friend ComplexPoly operator+(const ComplexPoly& a, const ComplexPoly& b) {
        std::vector<Complex> c(std::max(a.coeffs_.size(), b.coeffs_.size()), Complex(0.0));
        for (std::size_t k = 0; k < a.coeffs_.size(); ++k) c[k] += a.coeffs_[k];
        for (std::size_t k = 0; k < b.coeffs_.size(); ++k) c[k] += b.coeffs_[k];
        return ComplexPoly(std::move(c));
    }
    friend ComplexPoly operator-(const ComplexPoly& a, const ComplexPoly& b) {
        std::vector<Complex> c(std::max(a.coeffs_.size(), b.coeffs_.size()), Complex(0.0));
        for (std::size_t k = 0; k < a.coeffs_.size(); ++k) c[k] += a.coeffs_[k];
        for (std::size_t k = 0; k < b.coeffs_.size(); ++k) c[k] -= b.coeffs_[k];
        return ComplexPoly(std::move(c));
    }
    friend ComplexPoly operator-(const ComplexPoly& a) { return ComplexPoly(Complex(-1.0)) * a; }
    friend ComplexPoly operator*(const ComplexPoly& a, const ComplexPoly& b) {
        if (a.is_zero() || b.is_zero()) return ComplexPoly();
        std::vector<Complex> c(a.coeffs_.size() + b.coeffs_.size() - 1, Complex(0.0));
        for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
            for (std::size_t j = 0; j < b.coeffs_.size(); ++j)
                c[i + j] += a.coeffs_[i] * b.coeffs_[j];
        return ComplexPoly(std::move(c));
    }
    friend ComplexPoly operator*(Complex k, const ComplexPoly& a) { return ComplexPoly(k) * a; }
    friend ComplexPoly operator*(const ComplexPoly& a, Complex k) { return ComplexPoly(k) * a; }

    friend bool operator==(const ComplexPoly& a, const ComplexPoly& b) {
        return a.coeffs_ == b.coeffs_;
    }

    /// Synthetic division by (s - root), discarding the remainder. Used for
    /// pole/zero cancellation where the remainder is known to be negligible.
    ComplexPoly deflate(Complex root) const {
        if (degree() < 1) return ComplexPoly();
        std::vector<Complex> q(coeffs_.size() - 1);
        Complex carry = coeffs_.back();
        for (int k = degree() - 1; k >= 0; --k) {
            q[k] = carry;
            carry = coeffs_[k] + root * carry;
        }
        return ComplexPoly(std::move(q));
    }

private:
    void trim() {
        while (coeffs_.size() > 1 && coeffs_.back() == Complex(0.0)) coeffs_.pop_back();
    }

    std::vector<Complex> coeffs_;
};

namespace detail {

inline void sort_roots(std::vector<Complex>& roots) {
    std::sort(roots.begin(), roots.end(), [](const Complex& a, const Complex& b) {
        if (a.real() != b.real()) return a.real() < b.real();
        return a.imag() < b.imag();
    });
}

}  // namespace detail

/// All degree-many roots of p (with multiplicity), ordered by (real, imag).
///
/// Backend: eigenvalues of the monic companion matrix, followed by a few
/// Newton steps per root. Each returned root r satisfies
///   |p(r)| <= tol * sum_k |c_k| * max(1,|r|)^k.
/// Throws DomainError for the zero polynomial or degree < 1, NumericError
/// (carrying the best iterates) if the residual bound cannot be met.
inline std::vector<Complex> poly_roots(const ComplexPoly& p, double tol = 1e-10) {
    if (p.is_zero()) throw DomainError("poly_roots: zero polynomial has no well-defined roots");
    if (p.degree() < 1) throw DomainError("poly_roots: degree must be at least 1");

    const int n = p.degree();
    const std::vector<Complex>& c = p.coeffs();

    Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
    for (int k = 0; k < n; ++k) companion(k, n - 1) = -c[k] / c[n];
    for (int k = 1; k < n; ++k) companion(k, k - 1) = Complex(1.0);

    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw NumericError("poly_roots: companion eigensolver did not converge", {});

    std::vector<Complex> roots(n);
    for (int k = 0; k < n; ++k) roots[k] = solver.eigenvalues()[k];

    const ComplexPoly dp = p.derivative();
    for (Complex& r : roots) {
        Complex best = r;
        double best_res = std::abs(p.eval(r));
        for (int it = 0; it < 8 && best_res != 0.0; ++it) {
            const Complex d = dp.eval(r);
            if (d == Complex(0.0)) break;
            r -= p.eval(r) / d;
            const double res = std::abs(p.eval(r));
            if (res < best_res) {
                best = r;
                best_res = res;
            } else {
                break;
            }
        }
        r = best;
    }

    for (const Complex& r : roots) {
        const double scale = p.magnitude_bound(std::abs(r));
        if (std::abs(p.eval(r)) > tol * scale)
            throw NumericError("poly_roots: residual bound not met after refinement", roots);
    }

    detail::sort_roots(roots);
    return roots;
}

}  // namespace qfa
