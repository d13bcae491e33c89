#pragma once

// Geometry of the qutrit state space
//
//   Omega = { xi in R^8 : 3 xi^2 - 2 xi.(xi*xi) <= 1,  xi^2 <= 1 }.
//
// The boundary carries two strata: pure states (xi^2 = 1, xi*xi = xi,
// rank-1 density matrices) and mixed boundary states (det rho = 0 with
// xi^2 < 1).  Both membership residuals are exposed so callers can see how
// far a vector sits from each stratum.

#include <cmath>

#include "algebra.hpp"
#include "exponential.hpp"

namespace qutrit {

struct InvalidState : std::runtime_error {
    explicit InvalidState(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kGeomTolerance = 1e-8;

enum class StateTag { Interior, PureBoundary, MixedBoundary, Invalid };

inline const char* to_string(StateTag t) {
    switch (t) {
        case StateTag::Interior: return "interior";
        case StateTag::PureBoundary: return "pure-boundary";
        case StateTag::MixedBoundary: return "mixed-boundary";
        case StateTag::Invalid: return "invalid";
    }
    return "?";
}

struct StateClass {
    StateTag tag = StateTag::Invalid;
    double r_ball = 0.0;   // xi^2
    double r_det = 0.0;    // 3 xi^2 - 2 xi.(xi*xi);  equals 1 iff det rho = 0
};

inline StateClass classify(const Vec8& xi, double tol = kGeomTolerance) {
    require_finite(xi, "classify");
    StateClass out;
    out.r_ball = xi.squaredNorm();
    out.r_det = 3.0 * out.r_ball - 2.0 * cubic_invariant(xi);
    if (out.r_ball > 1.0 + tol || out.r_det > 1.0 + tol) {
        out.tag = StateTag::Invalid;
    } else if (std::abs(out.r_ball - 1.0) <= tol && (star(xi, xi) - xi).norm() <= tol) {
        out.tag = StateTag::PureBoundary;
    } else if (std::abs(out.r_det - 1.0) <= tol) {
        out.tag = StateTag::MixedBoundary;
    } else {
        out.tag = StateTag::Interior;
    }
    return out;
}

// Pure-state Bloch vector from the coset-space angles (alpha, beta, gamma,
// delta); the image always satisfies xi^2 = 1 and xi*xi = xi.  Should the
// angle formula ever drift off the pure stratum beyond tolerance, the vector
// is rebuilt from the rank-1 projector of the corresponding state vector.
inline Vec8 pure_from_angles(double alpha, double beta, double gamma, double delta) {
    const double sa = std::sin(alpha), ca = std::cos(alpha);
    const double sb = std::sin(beta), cb = std::cos(beta);
    Vec8 xi;
    xi[0] = sa * sb * ca * std::cos(delta - gamma);
    xi[1] = sa * sb * ca * std::sin(delta - gamma);
    xi[2] = 0.5 * (ca * ca * sb * sb - sa * sa);
    xi[3] = ca * ca * cb * sb * std::cos(gamma);
    xi[4] = -ca * ca * cb * sb * std::sin(gamma);
    xi[5] = cb * ca * sa * std::cos(delta);
    xi[6] = -cb * ca * sa * std::sin(delta);
    xi[7] = (ca * ca * sb * sb + sa * sa - 2.0 * ca * ca * cb * cb) / (2.0 * kSqrt3);
    xi *= kSqrt3;

    const double purity = std::abs(xi.squaredNorm() - 1.0) + (star(xi, xi) - xi).norm();
    if (purity > kGeomTolerance) {
        // rank-1 fallback: |psi> = (ca*sb*e^{i gamma}, sa*e^{i delta}, ca*cb)
        Eigen::Vector3cd psi;
        psi << ca * sb * std::exp(Complex(0.0, gamma)),
            sa * std::exp(Complex(0.0, delta)), ca * cb;
        const double n = psi.norm();
        if (n == 0.0) return -unit_vector(7);
        psi /= n;
        const CMat3 rho = psi * psi.adjoint();
        return density_to_bloch(rho);
    }
    return xi;
}

struct EigTriple {
    double nu1 = 0.0, nu2 = 0.0, nu3 = 0.0;
    double alpha = 0.0;
};

// Eigenvalues of bloch_to_density(xi) by the trigonometric solution of the
// characteristic cubic:
//   nu_1 = 1/3 + (2/3)|xi| cos(alpha/3),
//   nu_{2,3} = 1/3 - (2/3)|xi| cos(alpha/3 -+ pi/3),
//   cos(alpha) = xi.(xi*xi)/|xi|^3.
// Sorted descending.
inline EigTriple eigenvalues(const Vec8& xi, double tol = kGeomTolerance) {
    const StateClass sc = classify(xi);
    if (sc.tag == StateTag::Invalid) throw InvalidState("eigenvalues: xi outside the state space");
    EigTriple out;
    const double norm = xi.norm();
    if (norm < tol) {
        out.nu1 = out.nu2 = out.nu3 = 1.0 / 3.0;
        return out;
    }
    double cos_alpha = cubic_invariant(xi) / (norm * norm * norm);
    cos_alpha = std::clamp(cos_alpha, -1.0, 1.0);
    // Snap to the degenerate ends: acos turns O(eps) noise in cos_alpha into
    // O(sqrt(eps)) spurious splitting of a double eigenvalue.
    if (cos_alpha > 1.0 - 1e-12) cos_alpha = 1.0;
    if (cos_alpha < -1.0 + 1e-12) cos_alpha = -1.0;
    out.alpha = std::acos(cos_alpha);
    const double third = out.alpha / 3.0;
    out.nu1 = 1.0 / 3.0 + 2.0 / 3.0 * norm * std::cos(third);
    out.nu2 = 1.0 / 3.0 - 2.0 / 3.0 * norm * std::cos(third + M_PI / 3.0);
    out.nu3 = 1.0 / 3.0 - 2.0 / 3.0 * norm * std::cos(third - M_PI / 3.0);
    if (out.nu2 < out.nu3) std::swap(out.nu2, out.nu3);
    if (out.nu1 < out.nu2) std::swap(out.nu1, out.nu2);
    if (out.nu2 < out.nu3) std::swap(out.nu2, out.nu3);
    return out;
}

// Von Neumann entropy in base-3 logarithm, S in [0,1]; S = 1 at the
// maximally mixed state and S = 0 on the pure stratum.  Eigenvalues are
// clamped into [0,1] before taking the logarithm, with 0 log 0 = 0.
inline double entropy(const Vec8& xi, bool natural_log = false) {
    const EigTriple nu = eigenvalues(xi);
    const double log3 = std::log(3.0);
    if (nu.nu1 == nu.nu3) return natural_log ? log3 : 1.0;  // maximally mixed, exactly 1
    double s = 0.0;
    for (double v : {nu.nu1, nu.nu2, nu.nu3}) {
        v = std::clamp(v, 0.0, 1.0);
        // eigenvalues within machine precision of 0 or 1 contribute exactly 0
        if (v > 1e-15 && v < 1.0 - 1e-15) s -= v * std::log(v);
    }
    return natural_log ? s : s / log3;
}

}  // namespace qutrit
