#pragma once

// su(3) vector algebra on the 8-dimensional generalized Bloch space.
//
// A qutrit density matrix is written rho = (1/3)(I + sqrt(3) xi.lambda) with
// xi a real 8-vector and lambda_1..lambda_8 the Gell-Mann matrices.  The
// bilinear wedge and star products carry the commutator/anticommutator
// structure of su(3) down to R^8:
//
//   (a ^ b)_i = sqrt(3) f_ijk a_j b_k      (antisymmetric)
//   (a * b)_i = sqrt(3) d_ijk a_j b_k      (symmetric)
//
// The structure-constant tables f and d are generated from traces of the
// basis matrices rather than typed in, which makes them immune to
// sign-convention slips; the hand-listed values are asserted against the
// generated tables in the test suite.

#include <array>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace qutrit {

using Vec8 = Eigen::Matrix<double, 8, 1>;
using CMat3 = Eigen::Matrix3cd;
using Complex = std::complex<double>;

inline constexpr double kSqrt3 = 1.7320508075688772935;

struct NonHermitianInput : std::runtime_error {
    explicit NonHermitianInput(const std::string& what) : std::runtime_error(what) {}
};
struct NonUnitTrace : std::runtime_error {
    explicit NonUnitTrace(const std::string& what) : std::runtime_error(what) {}
};

inline bool all_finite(const Vec8& v) { return v.allFinite(); }

inline void require_finite(const Vec8& v, const char* who) {
    if (!v.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

inline void require_finite(const CMat3& m, const char* who) {
    if (!m.allFinite()) throw std::invalid_argument(std::string(who) + ": non-finite input");
}

// The eight Gell-Mann matrices, hermitian and traceless, Tr(l_j l_k) = 2 delta_jk.
inline const std::array<CMat3, 8>& gell_mann() {
    static const std::array<CMat3, 8> basis = [] {
        const Complex i(0.0, 1.0);
        std::array<CMat3, 8> l;
        for (auto& m : l) m.setZero();
        l[0](0, 1) = 1;  l[0](1, 0) = 1;
        l[1](0, 1) = -i; l[1](1, 0) = i;
        l[2](0, 0) = 1;  l[2](1, 1) = -1;
        l[3](0, 2) = 1;  l[3](2, 0) = 1;
        l[4](0, 2) = -i; l[4](2, 0) = i;
        l[5](1, 2) = 1;  l[5](2, 1) = 1;
        l[6](1, 2) = -i; l[6](2, 1) = i;
        l[7](0, 0) = 1.0 / kSqrt3;
        l[7](1, 1) = 1.0 / kSqrt3;
        l[7](2, 2) = -2.0 / kSqrt3;
        return l;
    }();
    return basis;
}

// Dense f/d tables plus sparse per-component entry lists for the products.
struct StructureConstants {
    struct Entry {
        int j, k;
        double v;
    };
    double f[8][8][8];
    double d[8][8][8];
    std::array<std::vector<Entry>, 8> f_rows;
    std::array<std::vector<Entry>, 8> d_rows;
};

inline const StructureConstants& structure_constants() {
    static const StructureConstants tables = [] {
        StructureConstants t;
        const auto& l = gell_mann();
        const Complex i(0.0, 1.0);
        for (int a = 0; a < 8; ++a) {
            for (int b = 0; b < 8; ++b) {
                const CMat3 comm = l[a] * l[b] - l[b] * l[a];
                const CMat3 anti = l[a] * l[b] + l[b] * l[a];
                for (int c = 0; c < 8; ++c) {
                    // f_abc = (1/4i) Tr([l_a,l_b] l_c),  d_abc = (1/4) Tr({l_a,l_b} l_c)
                    Complex fv = (comm * l[c]).trace() / (4.0 * i);
                    Complex dv = (anti * l[c]).trace() / 4.0;
                    double f = std::abs(fv.real()) < 1e-14 ? 0.0 : fv.real();
                    double d = std::abs(dv.real()) < 1e-14 ? 0.0 : dv.real();
                    t.f[a][b][c] = f;
                    t.d[a][b][c] = d;
                }
            }
        }
        for (int c = 0; c < 8; ++c) {
            for (int a = 0; a < 8; ++a)
                for (int b = 0; b < 8; ++b) {
                    if (t.f[c][a][b] != 0.0) t.f_rows[c].push_back({a, b, t.f[c][a][b]});
                    if (t.d[c][a][b] != 0.0) t.d_rows[c].push_back({a, b, t.d[c][a][b]});
                }
        }
        return t;
    }();
    return tables;
}

// (a ^ b)_i = sqrt(3) f_ijk a_j b_k
inline Vec8 wedge(const Vec8& a, const Vec8& b) {
    require_finite(a, "wedge");
    require_finite(b, "wedge");
    const auto& t = structure_constants();
    Vec8 out;
    for (int i = 0; i < 8; ++i) {
        double s = 0.0;
        for (const auto& e : t.f_rows[i]) s += e.v * a[e.j] * b[e.k];
        out[i] = kSqrt3 * s;
    }
    return out;
}

// (a * b)_i = sqrt(3) d_ijk a_j b_k
inline Vec8 star(const Vec8& a, const Vec8& b) {
    require_finite(a, "star");
    require_finite(b, "star");
    const auto& t = structure_constants();
    Vec8 out;
    for (int i = 0; i < 8; ++i) {
        double s = 0.0;
        for (const auto& e : t.d_rows[i]) s += e.v * a[e.j] * b[e.k];
        out[i] = kSqrt3 * s;
    }
    return out;
}

// a.(a*a), evaluated by the explicit coordinate polynomial.  Equals
// (sqrt(3)/2) Tr((a.lambda)^3) and (3 sqrt(3)/2) det(a.lambda).
inline double cubic_invariant(const Vec8& a) {
    require_finite(a, "cubic_invariant");
    const double a1 = a[0], a2 = a[1], a3 = a[2], a4 = a[3];
    const double a5 = a[4], a6 = a[5], a7 = a[6], a8 = a[7];
    return 3.0 * a8 * (a1 * a1 + a2 * a2 + a3 * a3) - a8 * a8 * a8
        - 1.5 * a8 * (a4 * a4 + a5 * a5 + a6 * a6 + a7 * a7)
        + 1.5 * kSqrt3 * a3 * (a4 * a4 + a5 * a5 - a6 * a6 - a7 * a7)
        + 3.0 * kSqrt3 * ((a1 * a6 - a2 * a7) * a4 + (a1 * a7 + a2 * a6) * a5);
}

// a.lambda as a 3x3 matrix.
inline CMat3 lambda_of(const Vec8& a) {
    const auto& l = gell_mann();
    CMat3 m = CMat3::Zero();
    for (int i = 0; i < 8; ++i) m += a[i] * l[i];
    return m;
}

// rho = (1/3)(I + sqrt(3) xi.lambda).  Hermitian with unit trace by
// construction; positive semidefiniteness is the caller's concern.
inline CMat3 bloch_to_density(const Vec8& xi) {
    require_finite(xi, "bloch_to_density");
    CMat3 rho = lambda_of(xi) * (kSqrt3 / 3.0);
    rho += CMat3::Identity() / 3.0;
    return rho;
}

// xi_i = (sqrt(3)/2) Tr(rho lambda_i), the inverse of bloch_to_density under
// the trace orthogonality Tr(l_j l_k) = 2 delta_jk.
inline Vec8 density_to_bloch(const CMat3& rho, double tol = 1e-9) {
    require_finite(rho, "density_to_bloch");
    if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > tol)
        throw NonHermitianInput("density_to_bloch: matrix is not hermitian");
    if (std::abs(rho.trace() - Complex(1.0, 0.0)) > tol)
        throw NonUnitTrace("density_to_bloch: trace differs from one");
    const auto& l = gell_mann();
    Vec8 xi;
    for (int i = 0; i < 8; ++i) {
        const Complex tr = (rho * l[i]).trace();
        xi[i] = 0.5 * kSqrt3 * tr.real();
    }
    return xi;
}

// Bloch vector of an unnormalized hermitian matrix together with its trace,
// i.e. m = (phi/3) I + (1/sqrt(3)) eta.lambda.  Used by the eta/phi
// linearization of the nonlinear flow.
inline void bloch_split(const CMat3& m, Vec8& eta, double& phi) {
    const auto& l = gell_mann();
    phi = m.trace().real();
    for (int i = 0; i < 8; ++i) eta[i] = 0.5 * kSqrt3 * (m * l[i]).trace().real();
}

// Real roots of x^3 - |a|^2 x - (2/(3 sqrt(3))) a.(a*a) = 0, the
// characteristic cubic of a.lambda, sorted descending.  The discriminant
// Q = ([a.(a*a)]^2 - |a|^6)/27 is never positive, so the trigonometric
// parametrization x1 = (2/sqrt(3))|a| cos(alpha/3), x_{2,3} =
// -(2/sqrt(3))|a| cos(alpha/3 +- pi/3), cos(alpha) = a.(a*a)/|a|^3 covers
// every case; Q = 0 lands on the degenerate branches alpha in {0, pi}.
struct CubicRoots {
    double x1 = 0.0, x2 = 0.0, x3 = 0.0;
    double alpha = 0.0;
    double discriminant_q = 0.0;
};

inline CubicRoots cubic_roots(const Vec8& a) {
    require_finite(a, "cubic_roots");
    CubicRoots r;
    const double norm2 = a.squaredNorm();
    if (norm2 == 0.0) return r;  // triple root at zero
    const double norm = std::sqrt(norm2);
    const double c3 = cubic_invariant(a);
    r.discriminant_q = (c3 * c3 - norm2 * norm2 * norm2) / 27.0;
    double cos_alpha = c3 / (norm2 * norm);
    cos_alpha = std::clamp(cos_alpha, -1.0, 1.0);
    r.alpha = std::acos(cos_alpha);
    const double scale = 2.0 / kSqrt3 * norm;
    const double third = r.alpha / 3.0;
    r.x1 = scale * std::cos(third);
    r.x2 = -scale * std::cos(third + M_PI / 3.0);
    r.x3 = -scale * std::cos(third - M_PI / 3.0);
    return r;
}

inline Vec8 unit_vector(int i) {
    Vec8 v = Vec8::Zero();
    v[i] = 1.0;
    return v;
}

}  // namespace qutrit
