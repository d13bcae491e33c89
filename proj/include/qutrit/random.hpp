#pragma once

// Seeded random draws used by the validation batteries, the identity
// checker and the tests: Haar-ish unitaries, adjoint rotations of the Bloch
// space, random states, and admissible generator pairs for every special
// evolution case.

#include <random>

#include "algebra.hpp"

namespace qutrit {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline Vec8 random_vec8(Rng& rng, double amplitude = 1.0) {
    Vec8 v;
    for (int i = 0; i < 8; ++i) v[i] = uniform(rng, -amplitude, amplitude);
    return v;
}

inline Eigen::Matrix3cd random_unitary(Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Matrix3cd g;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) g(r, c) = Complex(gauss(rng), gauss(rng));
    Eigen::HouseholderQR<Eigen::Matrix3cd> qr(g);
    Eigen::Matrix3cd q = qr.householderQ();
    const Eigen::Matrix3cd r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int i = 0; i < 3; ++i) {
        const Complex d = r(i, i);
        q.col(i) *= d / std::abs(d);
    }
    return q;
}

// Orthogonal 8x8 matrix R with (R a).lambda = U (a.lambda) U\dagger; it
// commutes with the wedge and star products.
inline Eigen::Matrix<double, 8, 8> adjoint_rotation(const Eigen::Matrix3cd& u) {
    const auto& l = gell_mann();
    Eigen::Matrix<double, 8, 8> rot;
    for (int i = 0; i < 8; ++i) {
        const CMat3 rotated = u * l[i] * u.adjoint();
        for (int j = 0; j < 8; ++j) rot(j, i) = 0.5 * (rotated * l[j]).trace().real();
    }
    return rot;
}

// Random density matrix (Haar eigenbasis, flat simplex spectrum) as a Bloch
// vector; always a valid state.
inline Vec8 random_state(Rng& rng) {
    std::exponential_distribution<double> expd(1.0);
    Eigen::Vector3d p;
    p << expd(rng), expd(rng), expd(rng);
    p /= p.sum();
    const Eigen::Matrix3cd u = random_unitary(rng);
    const CMat3 rho = u * p.asDiagonal() * u.adjoint();
    return density_to_bloch(rho);
}

inline Vec8 random_pure_state(Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::Vector3cd psi;
    for (int i = 0; i < 3; ++i) psi[i] = Complex(gauss(rng), gauss(rng));
    psi.normalize();
    const CMat3 rho = psi * psi.adjoint();
    return density_to_bloch(rho);
}

}  // namespace qutrit
