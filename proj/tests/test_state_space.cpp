#include <catch2/catch_amalgamated.hpp>

#include "qutrit/random.hpp"
#include "qutrit/state_space.hpp"

using namespace qutrit;

namespace {
Vec8 e(int i) { return unit_vector(i - 1); }
}

TEST_CASE("classification of reference states") {
    CHECK(classify(Vec8::Zero()).tag == StateTag::Interior);
    CHECK(classify(-e(8)).tag == StateTag::PureBoundary);
    CHECK(classify(0.5 * e(8)).tag == StateTag::MixedBoundary);
    CHECK(classify(2.0 * e(1)).tag == StateTag::Invalid);
    CHECK(classify(e(8)).tag == StateTag::Invalid);  // unit sphere but not a state

    const StateClass sc = classify(0.5 * e(8));
    CHECK(sc.r_ball == Catch::Approx(0.25).margin(1e-15));
    CHECK(sc.r_det == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("det-residual equals the density-matrix determinant relation") {
    Rng rng(41);
    for (int n = 0; n < 200; ++n) {
        const Vec8 xi = random_vec8(rng, 0.8);
        const StateClass sc = classify(xi);
        const double det = bloch_to_density(xi).determinant().real();
        CHECK(27.0 * det == Catch::Approx(1.0 - sc.r_det).margin(1e-10));
    }
    // boundary states really have a vanishing determinant
    for (int n = 0; n < 100; ++n) {
        const Vec8 xi = random_pure_state(rng);
        CHECK(std::abs(bloch_to_density(xi).determinant()) < 1e-13);
    }
}

TEST_CASE("pure state parametrization by angles") {
    CHECK((pure_from_angles(0, 0, 0, 0) + e(8)).norm() < 1e-12);

    Vec8 expected = Vec8::Zero();
    expected[2] = -kSqrt3 / 2.0;
    expected[7] = 0.5;
    CHECK((pure_from_angles(M_PI / 2.0, 0, 0, 0) - expected).norm() < 1e-12);

    Rng rng(43);
    for (int n = 0; n < 1000; ++n) {
        const double al = uniform(rng, -M_PI, M_PI);
        const double be = uniform(rng, -M_PI, M_PI);
        const double ga = uniform(rng, -M_PI, M_PI);
        const double de = uniform(rng, -M_PI, M_PI);
        const Vec8 xi = pure_from_angles(al, be, ga, de);
        CHECK(classify(xi).tag == StateTag::PureBoundary);
        CHECK(std::abs(xi.squaredNorm() - 1.0) < 1e-12);
        CHECK((star(xi, xi) - xi).norm() < 1e-12);
    }
}

TEST_CASE("trigonometric eigenvalues against a hermitian eigensolver") {
    const EigTriple mixed = eigenvalues(Vec8::Zero());
    CHECK(mixed.nu1 == Catch::Approx(1.0 / 3.0));
    CHECK(mixed.nu2 == Catch::Approx(1.0 / 3.0));
    CHECK(mixed.nu3 == Catch::Approx(1.0 / 3.0));

    const EigTriple half = eigenvalues(0.5 * e(8));
    CHECK(half.nu1 == Catch::Approx(0.5).margin(1e-12));
    CHECK(half.nu2 == Catch::Approx(0.5).margin(1e-12));
    CHECK(half.nu3 == Catch::Approx(0.0).margin(1e-12));

    Rng rng(47);
    for (int n = 0; n < 300; ++n) {
        const Vec8 xi = n % 3 == 0 ? random_pure_state(rng) : random_state(rng);
        const EigTriple nu = eigenvalues(xi);
        CHECK(nu.nu1 + nu.nu2 + nu.nu3 == Catch::Approx(1.0).margin(1e-12));
        Eigen::SelfAdjointEigenSolver<CMat3> es(bloch_to_density(xi));
        CHECK(nu.nu3 == Catch::Approx(es.eigenvalues()[0]).margin(1e-10));
        CHECK(nu.nu2 == Catch::Approx(es.eigenvalues()[1]).margin(1e-10));
        CHECK(nu.nu1 == Catch::Approx(es.eigenvalues()[2]).margin(1e-10));
    }

    for (int n = 0; n < 50; ++n) {
        const EigTriple nu = eigenvalues(random_pure_state(rng));
        CHECK(nu.nu1 == Catch::Approx(1.0).margin(1e-9));
        CHECK(std::abs(nu.nu2) < 1e-9);
        CHECK(std::abs(nu.nu3) < 1e-9);
    }

    CHECK_THROWS_AS(eigenvalues(2.0 * e(1)), InvalidState);
}

TEST_CASE("entropy anchors and range") {
    CHECK(entropy(Vec8::Zero()) == Catch::Approx(1.0).margin(1e-15));

    Rng rng(53);
    for (int n = 0; n < 50; ++n) CHECK(entropy(random_pure_state(rng)) < 1e-9);

    CHECK(entropy(0.5 * e(8)) == Catch::Approx(std::log(2.0) / std::log(3.0)).margin(1e-12));

    for (int n = 0; n < 200; ++n) {
        const double s = entropy(random_state(rng));
        CHECK(s >= 0.0);
        CHECK(s <= 1.0 + 1e-12);
    }

    // natural-log variant is just a rescaling
    const Vec8 xi = random_state(rng);
    CHECK(entropy(xi, true) == Catch::Approx(entropy(xi) * std::log(3.0)).margin(1e-12));

    CHECK_THROWS_AS(entropy(2.0 * e(1)), InvalidState);
}

TEST_CASE("entropy is invariant under the adjoint action") {
    Rng rng(59);
    for (int n = 0; n < 100; ++n) {
        const Vec8 xi = random_state(rng);
        const Vec8 a = random_vec8(rng);
        const double theta = uniform(rng, -2.0, 2.0);
        const CMat3 u = exp_lambda(Complex(0.0, theta), a);
        const CMat3 rotated = u * bloch_to_density(xi) * u.adjoint();
        CHECK(entropy(density_to_bloch(rotated)) == Catch::Approx(entropy(xi)).margin(1e-10));
    }
}
