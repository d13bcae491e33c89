#pragma once

// Matrix exponentials on 3x3 complex matrices.
//
// matrix_exp is a plain scaling-and-squaring exponential with a Taylor core,
// good to ~1e-13 relative for the norms this library produces.  exp_lambda
// evaluates e^(tau a.lambda) through the closed forms that exploit the
// three-term expansion (a.lambda)^n = c_n + d_n a.lambda + e_n (a*a).lambda,
// with one branch per degeneracy class of the characteristic cubic.  Every
// exp_lambda result is cross-checked against matrix_exp; on disagreement the
// series value wins and the event is counted, so a transcription slip in a
// closed form can degrade speed but never correctness.

#include <atomic>
#include <cmath>
#include <complex>
#include <cstdio>

#include "algebra.hpp"

namespace qutrit {

struct OverflowRisk : std::runtime_error {
    explicit OverflowRisk(const std::string& what) : std::runtime_error(what) {}
};

// e^M by scaling and squaring.  Throws OverflowRisk for norms that would
// push the squaring phase toward the double-precision ceiling; callers are
// expected to shrink their time step and renormalize instead.
inline CMat3 matrix_exp(const CMat3& m, double norm_bound = 350.0) {
    require_finite(m, "matrix_exp");
    const double norm = m.cwiseAbs().rowwise().sum().maxCoeff();  // induced inf-norm
    if (norm > norm_bound)
        throw OverflowRisk("matrix_exp: norm " + std::to_string(norm) + " exceeds bound");
    int squarings = 0;
    double scaled = norm;
    while (scaled > 0.5) {
        scaled *= 0.5;
        ++squarings;
    }
    const double factor = std::ldexp(1.0, -squarings);
    const CMat3 t = m * factor;
    CMat3 sum = CMat3::Identity();
    CMat3 term = CMat3::Identity();
    for (int k = 1; k <= 24; ++k) {
        term = (term * t) / static_cast<double>(k);
        sum += term;
        if (term.cwiseAbs().maxCoeff() < 1e-20) break;
    }
    for (int s = 0; s < squarings; ++s) sum = sum * sum;
    return sum;
}

namespace detail {

struct ExpCoefficients {
    Complex c{0.0, 0.0}, d{0.0, 0.0}, e{0.0, 0.0};
};

// Branch for a*a = +|a|a: spectrum { 2|a|/sqrt3, -|a|/sqrt3 (double) },
// two-term expansion, no (a*a).lambda part.
inline ExpCoefficients exp_coeffs_star_pos(Complex tau, double norm) {
    ExpCoefficients out;
    const Complex ep = std::exp(tau * (2.0 / kSqrt3) * norm);
    const Complex em = std::exp(-tau * (1.0 / kSqrt3) * norm);
    out.c = ep / 3.0 + 2.0 * em / 3.0;
    out.d = (ep - em) / (kSqrt3 * norm);
    return out;
}

// Branch for a*a = -|a|a, obtained from the previous one by a -> -a,
// tau -> -tau.
inline ExpCoefficients exp_coeffs_star_neg(Complex tau, double norm) {
    ExpCoefficients out;
    const Complex ep = std::exp(-tau * (2.0 / kSqrt3) * norm);
    const Complex em = std::exp(tau * (1.0 / kSqrt3) * norm);
    out.c = ep / 3.0 + 2.0 * em / 3.0;
    out.d = (em - ep) / (kSqrt3 * norm);
    return out;
}

// Branch for a.(a*a) = 0: spectrum { 0, +-|a| }.
inline ExpCoefficients exp_coeffs_null_cubic(Complex tau, double norm, double norm2) {
    ExpCoefficients out;
    const Complex ch = std::cosh(tau * norm);
    const Complex sh = std::sinh(tau * norm);
    out.c = 1.0 / 3.0 + 2.0 * ch / 3.0;
    out.d = sh / norm;
    out.e = (ch - 1.0) / (kSqrt3 * norm2);
    return out;
}

// Generic branch: exponentials over the trigonometric roots with the
// partial-fraction weights of the power-series solution.  Valid away from
// the degenerate denominators sin(alpha/3) ~ 0 and cos(alpha/3 + pi/6) ~ 0.
inline ExpCoefficients exp_coeffs_generic(Complex tau, double norm, double norm2,
                                          const CubicRoots& roots) {
    const double third = roots.alpha / 3.0;
    const double cp = std::cos(third + M_PI / 6.0);
    const double cm = std::cos(third - M_PI / 6.0);
    const double sn = std::sin(third);
    const double ca = std::cos(third);
    const Complex e1 = std::exp(tau * roots.x1);
    const Complex e2 = std::exp(tau * roots.x2);
    const Complex e3 = std::exp(tau * roots.x3);

    ExpCoefficients out;
    const double sp = std::sin(third - M_PI / 6.0);
    const double sq = std::sin(third + M_PI / 6.0);
    out.c = (4.0 * ca * ca - 1.0) / (12.0 * cp * cm) * e1
        + (1.0 - 4.0 * sp * sp) / (12.0 * cp * sn) * e2
        + (4.0 * sq * sq - 1.0) / (12.0 * cm * sn) * e3;
    out.d = ca / (2.0 * kSqrt3 * norm * cp * cm) * e1
        - sp / (2.0 * kSqrt3 * norm * cp * sn) * e2
        - sq / (2.0 * kSqrt3 * norm * cm * sn) * e3;
    out.e = 1.0 / (4.0 * kSqrt3 * norm2 * cp * cm) * e1
        - 1.0 / (4.0 * kSqrt3 * norm2 * cp * sn) * e2
        + 1.0 / (4.0 * kSqrt3 * norm2 * cm * sn) * e3;
    return out;
}

inline std::atomic<long>& exp_lambda_fallback_count() {
    static std::atomic<long> count{0};
    return count;
}

}  // namespace detail

// Relative detection tolerance for the special-case branches.
inline constexpr double kCaseTolerance = 1e-9;

// e^(tau a.lambda) via the closed forms, verified against matrix_exp.  The
// series value is authoritative whenever the two disagree beyond tolerance.
inline CMat3 exp_lambda(Complex tau, const Vec8& a, double check_tol = 1e-10) {
    require_finite(a, "exp_lambda");
    if (!std::isfinite(tau.real()) || !std::isfinite(tau.imag()))
        throw std::invalid_argument("exp_lambda: non-finite tau");

    const double norm2 = a.squaredNorm();
    if (norm2 == 0.0) return CMat3::Identity();
    const double norm = std::sqrt(norm2);

    const Vec8 aa = star(a, a);
    const double c3 = cubic_invariant(a);
    detail::ExpCoefficients k;
    bool diagonal_done = false;
    CMat3 closed;

    if ((aa - norm * a).norm() <= kCaseTolerance * norm2) {
        k = detail::exp_coeffs_star_pos(tau, norm);
    } else if ((aa + norm * a).norm() <= kCaseTolerance * norm2) {
        k = detail::exp_coeffs_star_neg(tau, norm);
    } else if (std::abs(c3) <= kCaseTolerance * norm2 * norm) {
        k = detail::exp_coeffs_null_cubic(tau, norm, norm2);
    } else {
        const Vec8 offdiag = (Vec8() << a[0], a[1], 0, a[3], a[4], a[5], a[6], 0).finished();
        if (offdiag.norm() <= kCaseTolerance * norm) {
            // diagonal generator: exponentiate the eigenvalues directly
            closed = CMat3::Zero();
            closed(0, 0) = std::exp(tau * (a[2] + a[7] / kSqrt3));
            closed(1, 1) = std::exp(tau * (-a[2] + a[7] / kSqrt3));
            closed(2, 2) = std::exp(tau * (-2.0 * a[7] / kSqrt3));
            diagonal_done = true;
        } else {
            const CubicRoots roots = cubic_roots(a);
            const double third = roots.alpha / 3.0;
            if (std::min(std::abs(std::sin(third)),
                         std::abs(std::cos(third + M_PI / 6.0))) < 1e-6) {
                // nearly degenerate roots: reuse the exact double-root forms
                k = std::sin(third) < std::cos(third + M_PI / 6.0)
                        ? detail::exp_coeffs_star_pos(tau, norm)
                        : detail::exp_coeffs_star_neg(tau, norm);
            } else {
                k = detail::exp_coeffs_generic(tau, norm, norm2, roots);
            }
        }
    }

    if (!diagonal_done) {
        closed = k.c * CMat3::Identity() + k.d * lambda_of(a) + k.e * lambda_of(aa);
    }

    const CMat3 reference = matrix_exp(tau * lambda_of(a));
    const double scale = std::max(1.0, reference.cwiseAbs().maxCoeff());
    if ((closed - reference).cwiseAbs().maxCoeff() > check_tol * scale) {
        detail::exp_lambda_fallback_count().fetch_add(1, std::memory_order_relaxed);
        return reference;
    }
    return closed;
}

// Number of times exp_lambda had to fall back on the series exponential.
inline long exp_lambda_fallbacks() {
    return detail::exp_lambda_fallback_count().load(std::memory_order_relaxed);
}

}  // namespace qutrit
