#pragma once

#include <cmath>
#include <complex>
#include <optional>
#include <utility>
#include <vector>

#include "qfa/errors.hpp"
#include "qfa/poly.hpp"

namespace qfa {

/// Ratio of two complex-coefficient polynomials in s.
///
/// Canonical form: the denominator is monic (leading coefficient 1) and never
/// identically zero; a zero numerator is stored over the denominator 1.
/// Arithmetic is exact coefficient arithmetic and never cancels common
/// factors on its own — see simplified() for opt-in cancellation.
class RationalFunction {
public:
    RationalFunction() : num_(), den_(Complex(1.0)) {}
    RationalFunction(double c) : num_(c), den_(Complex(1.0)) {}
    RationalFunction(Complex c) : num_(c), den_(Complex(1.0)) {}
    RationalFunction(ComplexPoly num) : num_(std::move(num)), den_(Complex(1.0)) {}
    RationalFunction(ComplexPoly num, ComplexPoly den) : num_(std::move(num)), den_(std::move(den)) {
        if (den_.is_zero()) throw DomainError("RationalFunction: denominator is identically zero");
        canonicalize();
    }

    const ComplexPoly& num() const { return num_; }
    const ComplexPoly& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    bool is_constant() const { return num_.degree() == 0 && den_.degree() == 0; }

    /// num(s)/den(s) with an underflow guard: evaluation where |den(s)| is
    /// negligible against the denominator's coefficient scale is a pole.
    Complex eval(Complex s) const {
        const Complex d = den_.eval(s);
        const double scale = den_.magnitude_bound(std::abs(s));
        if (std::abs(d) <= 1e-14 * scale)
            throw PoleEvaluationError("RationalFunction: evaluation at a pole", s);
        return num_.eval(s) / d;
    }

    friend RationalFunction operator+(const RationalFunction& a, const RationalFunction& b) {
        return RationalFunction(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
    }
    friend RationalFunction operator-(const RationalFunction& a, const RationalFunction& b) {
        return RationalFunction(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
    }
    friend RationalFunction operator-(const RationalFunction& a) {
        return RationalFunction(-a.num_, a.den_);
    }
    friend RationalFunction operator*(const RationalFunction& a, const RationalFunction& b) {
        return RationalFunction(a.num_ * b.num_, a.den_ * b.den_);
    }
    friend RationalFunction operator/(const RationalFunction& a, const RationalFunction& b) {
        if (b.is_zero()) throw DomainError("RationalFunction: division by the zero function");
        return RationalFunction(a.num_ * b.den_, a.den_ * b.num_);
    }

    friend bool operator==(const RationalFunction& a, const RationalFunction& b) {
        return a.num_ == b.num_ && a.den_ == b.den_;
    }

private:
    void canonicalize() {
        if (num_.is_zero()) {
            den_ = ComplexPoly(Complex(1.0));
            return;
        }
        const Complex lead = den_.leading();
        std::vector<Complex> n = num_.coeffs(), d = den_.coeffs();
        for (Complex& c : n) c /= lead;
        for (Complex& c : d) c /= lead;
        d.back() = Complex(1.0);
        num_ = ComplexPoly(std::move(n));
        den_ = ComplexPoly(std::move(d));
    }

    ComplexPoly num_, den_;
};

/// Named forms of the arithmetic, matching the operator overloads.
enum class RfOp { add, sub, mul, div };

inline RationalFunction rf_arith(const RationalFunction& a, const RationalFunction& b, RfOp op) {
    switch (op) {
        case RfOp::add: return a + b;
        case RfOp::sub: return a - b;
        case RfOp::mul: return a * b;
        case RfOp::div: return a / b;
    }
    throw DomainError("rf_arith: unknown operation");
}

inline Complex rf_eval(const RationalFunction& r, Complex s) { return r.eval(s); }

namespace detail {

/// Max relative deviation between two rational functions on a circle of
/// sampling points chosen away from both pole sets.
inline double response_deviation(const RationalFunction& a, const RationalFunction& b,
                                 double radius) {
    double worst = 0.0;
    const int n = 24;
    for (int k = 0; k < n; ++k) {
        const double th = (2.0 * M_PI * (k + 0.37)) / n;
        const Complex s = radius * Complex(std::cos(th), std::sin(th));
        Complex va, vb;
        try {
            va = a.eval(s);
            vb = b.eval(s);
        } catch (const PoleEvaluationError&) {
            return std::numeric_limits<double>::infinity();
        }
        const double denom = std::max({std::abs(va), std::abs(vb), 1e-30});
        worst = std::max(worst, std::abs(va - vb) / denom);
    }
    return worst;
}

}  // namespace detail

/// Opt-in pole/zero cancellation. Numerator and denominator roots closer than
/// cluster_tol (relative to their magnitude) are deflated pairwise; the result
/// is kept only if the frequency response moves by less than response_tol on a
/// verification circle, otherwise the input is returned unchanged.
///
/// Needed because naive loop-closure algebra inflates degrees and creates
/// spurious pole/zero pairs.
inline RationalFunction simplified(const RationalFunction& r, double cluster_tol = 1e-8,
                                   double response_tol = 1e-9) {
    if (r.is_zero() || r.num().degree() < 1 || r.den().degree() < 1) return r;

    std::vector<Complex> nroots, droots;
    try {
        nroots = poly_roots(r.num());
        droots = poly_roots(r.den());
    } catch (const NumericError&) {
        return r;
    }

    ComplexPoly num = r.num(), den = r.den();
    std::vector<bool> used(nroots.size(), false);
    bool any = false;
    double max_root = 1.0;
    for (const Complex& z : nroots) max_root = std::max(max_root, std::abs(z));
    for (const Complex& z : droots) max_root = std::max(max_root, std::abs(z));

    for (const Complex& dr : droots) {
        int match = -1;
        double best = cluster_tol * std::max(1.0, std::abs(dr));
        for (std::size_t i = 0; i < nroots.size(); ++i) {
            if (used[i]) continue;
            const double dist = std::abs(nroots[i] - dr);
            if (dist <= best) {
                best = dist;
                match = static_cast<int>(i);
            }
        }
        if (match >= 0) {
            used[match] = true;
            num = num.deflate(nroots[match]);
            den = den.deflate(dr);
            any = true;
        }
    }
    if (!any) return r;

    RationalFunction reduced(num, den);
    if (detail::response_deviation(r, reduced, 2.0 * max_root + 1.0) > response_tol) return r;
    return reduced;
}

}  // namespace qfa
