#include <catch2/catch_amalgamated.hpp>

#include "qutrit/evolution.hpp"
#include "qutrit/random.hpp"

using namespace qutrit;

namespace {

Vec8 e(int i) { return unit_vector(i - 1); }

const CaseTag kSpecialCases[] = {
    CaseTag::LinearStarPos,  CaseTag::LinearStarNeg,  CaseTag::LinearNullCubic,
    CaseTag::LinearDiagonal, CaseTag::NonlinStarPos,  CaseTag::NonlinStarNeg,
    CaseTag::NonlinNullCubic, CaseTag::NonlinDiagonal, CaseTag::Rational,
};

}  // namespace

TEST_CASE("riccati right-hand side anchors") {
    const EvolutionParams frozen = EvolutionParams::make(Vec8::Zero(), Vec8::Zero());
    Rng rng(61);
    for (int n = 0; n < 16; ++n) CHECK(riccati_rhs(random_state(rng), frozen).norm() == 0.0);

    // stationary pure state of the star-positive dissipative flow
    for (int n = 0; n < 16; ++n) {
        const Vec8 b = random_case_generator(detail::SingleCase::StarPos, rng);
        const EvolutionParams p = EvolutionParams::make(Vec8::Zero(), b);
        CHECK(riccati_rhs(b / b.norm(), p).norm() < 1e-13);
    }

    // unitary flow conserves xi^2 and xi.(xi*xi) infinitesimally
    for (int n = 0; n < 32; ++n) {
        const Vec8 a = random_vec8(rng);
        const Vec8 xi = random_state(rng);
        const EvolutionParams p = EvolutionParams::make(a, Vec8::Zero());
        const Vec8 rhs = riccati_rhs(xi, p);
        CHECK(std::abs(xi.dot(rhs)) < 1e-13);
        CHECK(std::abs(star(xi, xi).dot(rhs)) < 1e-13);
    }
}

TEST_CASE("riccati jacobian matches finite differences") {
    Rng rng(67);
    for (int n = 0; n < 8; ++n) {
        const EvolutionParams p = EvolutionParams::make(random_vec8(rng), random_vec8(rng));
        const Vec8 xi = random_state(rng);
        const auto jac = riccati_jacobian(xi, p);
        const double h = 1e-6;
        for (int k = 0; k < 8; ++k) {
            const Vec8 dp = riccati_rhs(xi + h * unit_vector(k), p);
            const Vec8 dm = riccati_rhs(xi - h * unit_vector(k), p);
            const Vec8 col = (dp - dm) / (2.0 * h);
            CHECK((col - jac.col(k)).cwiseAbs().maxCoeff() < 1e-7);
        }
    }
}

TEST_CASE("qubit right-hand side and the embedded subspace") {
    using V3 = Eigen::Vector3d;
    CHECK(qubit_rhs(V3(0.2, -0.1, 0.4), V3::Zero(), V3::Zero()).norm() == 0.0);
    {
        const V3 b3(0.3, -0.7, 0.2);
        CHECK(qubit_rhs(b3.normalized(), V3::Zero(), b3).norm() < 1e-14);
    }

    Rng rng(71);
    for (int n = 0; n < 64; ++n) {
        V3 zeta(uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5), uniform(rng, -0.5, 0.5));
        V3 a3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        V3 b3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        Vec8 xi = Vec8::Zero(), a = Vec8::Zero(), b = Vec8::Zero();
        for (int i = 0; i < 3; ++i) {
            xi[i] = kSqrt3 / 2.0 * zeta[i];
            a[i] = a3[i];
            b[i] = b3[i];
        }
        xi[7] = 0.5;
        const Vec8 rhs = riccati_rhs(xi, EvolutionParams::make(a, b));
        const V3 qr = qubit_rhs(zeta, a3, b3);
        for (int i = 0; i < 3; ++i)
            CHECK(rhs[i] == Catch::Approx(kSqrt3 / 2.0 * qr[i]).margin(1e-12));
        for (int i = 3; i < 8; ++i) CHECK(std::abs(rhs[i]) < 1e-12);
    }

    // the literal truncation (components 4..8 zeroed) stays invariant only
    // in the unitary case
    for (int n = 0; n < 32; ++n) {
        Vec8 a = Vec8::Zero(), xi = Vec8::Zero();
        for (int i = 0; i < 3; ++i) {
            a[i] = uniform(rng, -1, 1);
            xi[i] = uniform(rng, -0.3, 0.3);
        }
        const Vec8 rhs = riccati_rhs(xi, EvolutionParams::make(a, Vec8::Zero()));
        for (int i = 3; i < 8; ++i) CHECK(std::abs(rhs[i]) < 1e-14);
    }
}

TEST_CASE("case detection") {
    CHECK(detect_case(-e(8), Vec8::Zero()) == CaseTag::LinearStarPos);
    CHECK(detect_case(e(8), Vec8::Zero()) == CaseTag::LinearStarNeg);
    CHECK(detect_case(e(3), Vec8::Zero()) == CaseTag::LinearNullCubic);

    Vec8 diag = Vec8::Zero();
    diag[2] = 0.7;
    diag[7] = 0.31;
    CHECK(detect_case(diag, Vec8::Zero()) == CaseTag::LinearDiagonal);

    Vec8 bneg = Vec8::Zero();
    bneg[2] = kSqrt3 / 2.0;
    bneg[7] = -0.5;
    CHECK(detect_case(Vec8::Zero(), bneg) == CaseTag::NonlinStarNeg);

    CHECK(detect_case(Vec8::Zero(), Vec8::Zero()) == CaseTag::LinearDiagonal);

    Rng rng(73);
    for (CaseTag tag : kSpecialCases) {
        for (int n = 0; n < 12; ++n) {
            const EvolutionParams p = random_case_params(tag, rng);
            CHECK(p.case_tag == tag);
        }
    }
    for (int n = 0; n < 24; ++n)
        CHECK(detect_case(random_vec8(rng), random_vec8(rng)) == CaseTag::General);
}

TEST_CASE("closed forms reproduce the global propagator") {
    Rng rng(79);
    for (CaseTag tag : kSpecialCases) {
        double worst = 0.0;
        for (int n = 0; n < 6; ++n) {
            const EvolutionParams p = random_case_params(tag, rng);
            const Vec8 xi0 = n % 3 == 0 ? random_pure_state(rng) : random_state(rng);
            CHECK((closed_form(xi0, p, 0.0) - xi0).norm() < 1e-14);
            for (double t : {0.3, 1.4, 5.0, 11.0}) {
                const Vec8 cf = closed_form(xi0, p, t);
                const Vec8 ex = propagate_exact(xi0, p, t);
                worst = std::max(worst, (cf - ex).cwiseAbs().maxCoeff());
            }
        }
        INFO(to_string(tag));
        CHECK(worst < 1e-10);
        CHECK_FALSE(closed_form_delegated(tag));
    }
}

TEST_CASE("closed form rejects the general case and invalid states") {
    Rng rng(83);
    const EvolutionParams general = EvolutionParams::make(random_vec8(rng), random_vec8(rng));
    CHECK_THROWS_AS(closed_form(random_state(rng), general, 1.0), UnsupportedCase);

    const EvolutionParams p = random_case_params(CaseTag::NonlinStarPos, rng);
    CHECK_THROWS_AS(closed_form(3.0 * e(1), p, 1.0), InvalidState);
}

TEST_CASE("unitary closed form is periodic in the star-positive case") {
    Rng rng(89);
    const EvolutionParams p = random_case_params(CaseTag::LinearStarPos, rng);
    const Vec8 xi0 = random_state(rng);
    const double period = 2.0 * M_PI / (kSqrt3 * p.a.norm());
    CHECK((closed_form(xi0, p, period) - xi0).norm() < 1e-11);
    CHECK((closed_form(xi0, p, 3.0 * period) - xi0).norm() < 1e-11);
    // generic intermediate times move the state
    CHECK((closed_form(xi0, p, 0.37 * period) - xi0).norm() > 1e-3);
}

TEST_CASE("dissipative star-positive flow relaxes to the pure attractor") {
    Rng rng(97);
    const EvolutionParams p = random_case_params(CaseTag::NonlinStarPos, rng);
    const Vec8 attractor = p.b / p.b.norm();
    const Vec8 far = closed_form(Vec8::Zero(), p, 40.0 / p.b.norm());
    CHECK((far - attractor).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("rational flow approaches the algebraic limit point") {
    Rng rng(101);
    const EvolutionParams p = random_case_params(CaseTag::Rational, rng);
    const Vec8 limit =
        0.5 * (star(p.a, p.a) + wedge(p.a, p.b)) / p.a.squaredNorm();
    const Vec8 far = closed_form(Vec8::Zero(), p, 1e9);
    CHECK((far - limit).cwiseAbs().maxCoeff() < 1e-8);
    CHECK(riccati_rhs(limit, p).norm() < 1e-12);
    // the limit sits on the det rho = 0 boundary
    const StateClass sc = classify(limit);
    CHECK(std::abs(sc.r_det - 1.0) < 1e-12);
}

TEST_CASE("nonlinear linearization: phi stays positive and consistent") {
    Rng rng(103);
    for (CaseTag tag : {CaseTag::NonlinStarPos, CaseTag::NonlinStarNeg,
                        CaseTag::NonlinNullCubic, CaseTag::NonlinDiagonal,
                        CaseTag::Rational}) {
        const EvolutionParams p = random_case_params(tag, rng);
        const Vec8 xi0 = random_state(rng);
        CHECK(closed_form_linearization(xi0, p, 0.0).phi == Catch::Approx(1.0).margin(1e-14));
        for (double t : {0.5, 2.0, 6.0}) {
            const LinearizationPair lp = closed_form_linearization(xi0, p, t);
            CHECK(lp.phi > 0.0);
            // d/dt (eta/phi) equals the riccati field, by central differences
            const double h = 1e-5;
            const LinearizationPair lp1 = closed_form_linearization(xi0, p, t - h);
            const LinearizationPair lp2 = closed_form_linearization(xi0, p, t + h);
            const Vec8 deriv = (lp2.eta / lp2.phi - lp1.eta / lp1.phi) / (2.0 * h);
            const Vec8 rhs = riccati_rhs(lp.eta / lp.phi, p);
            CHECK((deriv - rhs).cwiseAbs().maxCoeff() < 1e-6 * std::max(1.0, rhs.norm()));
        }
    }
}

TEST_CASE("global propagator basics") {
    Rng rng(107);
    const EvolutionParams p = EvolutionParams::make(random_vec8(rng), random_vec8(rng));
    const Vec8 xi0 = random_state(rng);
    CHECK((propagate_exact(xi0, p, 0.0) - xi0).norm() == 0.0);

    // pure states stay pure under every (a, b)
    for (int n = 0; n < 24; ++n) {
        const EvolutionParams q = EvolutionParams::make(random_vec8(rng), random_vec8(rng));
        const Vec8 pure = random_pure_state(rng);
        for (double t : {0.5, 3.0, 20.0}) {
            const Vec8 out = propagate_exact(pure, q, t);
            CHECK(std::abs(out.squaredNorm() - 1.0) < 1e-10);
            CHECK((star(out, out) - out).norm() < 1e-9);
        }
    }

    // long-time slicing agrees with composition of short steps
    const EvolutionParams strong = EvolutionParams::make(random_vec8(rng), 2.0 * random_vec8(rng));
    Vec8 stepwise = xi0;
    for (int k = 0; k < 50; ++k) stepwise = propagate_exact(stepwise, strong, 1.0);
    CHECK((propagate_exact(xi0, strong, 50.0) - stepwise).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("adaptive integration against the propagator") {
    Rng rng(109);
    for (int n = 0; n < 6; ++n) {
        const Vec8 a = random_vec8(rng, 2.0 / kSqrt3);
        const Vec8 b = random_vec8(rng, 2.0 / kSqrt3);
        const EvolutionParams p = EvolutionParams::make(a, b);
        const Vec8 xi0 = random_state(rng);
        const Trajectory traj = integrate(xi0, p, 10.0, 101);
        const Vec8 exact = propagate_exact(xi0, p, 10.0);
        CHECK((traj.states.back() - exact).cwiseAbs().maxCoeff() < 1e-7);
        CHECK(traj.meta.max_ball_residual < 1e-9);
        CHECK(traj.meta.max_det_residual < 1e-9);
        CHECK(traj.meta.accepted > 0);
    }
}

TEST_CASE("unitary flow conserves its first integrals over long times") {
    Rng rng(113);
    for (int n = 0; n < 3; ++n) {
        const EvolutionParams p = EvolutionParams::make(random_vec8(rng), Vec8::Zero());
        const Vec8 xi0 = random_state(rng);
        const double ball0 = xi0.squaredNorm();
        const double cubic0 = cubic_invariant(xi0);
        const Trajectory traj = integrate(xi0, p, 100.0, 501);
        double worst_ball = 0.0, worst_cubic = 0.0;
        for (const Vec8& s : traj.states) {
            worst_ball = std::max(worst_ball, std::abs(s.squaredNorm() - ball0));
            worst_cubic = std::max(worst_cubic, std::abs(cubic_invariant(s) - cubic0));
        }
        CHECK(worst_ball < 1e-8);
        CHECK(worst_cubic < 1e-8);
    }
}

TEST_CASE("integration error paths") {
    Rng rng(127);
    const EvolutionParams p = EvolutionParams::make(random_vec8(rng), random_vec8(rng));
    CHECK_THROWS_AS(integrate(3.0 * e(1), p, 1.0, 11), InvalidState);
    CHECK_THROWS_AS(integrate(random_state(rng), p, -1.0, 11), std::invalid_argument);
    IntegrateOptions opts;
    opts.max_steps = 3;
    CHECK_THROWS_AS(integrate(random_state(rng), p, 10.0, 11, opts), StepSizeUnderflow);
}

TEST_CASE("convexity weight and mixing identity") {
    Rng rng(131);
    const EvolutionParams p = EvolutionParams::make(random_vec8(rng), random_vec8(rng));
    const Vec8 xi1 = random_state(rng), xi2 = random_state(rng);
    CHECK(convexity_lambda(xi1, xi2, 1.0, p, 1.3) == Catch::Approx(1.0).margin(1e-12));
    CHECK(convexity_lambda(xi1, xi1, 0.42, p, 1.3) == Catch::Approx(0.42).margin(1e-12));

    for (int n = 0; n < 200; ++n) {
        const EvolutionParams q =
            EvolutionParams::make(random_vec8(rng, 1.2), random_vec8(rng, 1.2));
        const Vec8 r1 = random_state(rng), r2 = random_state(rng);
        const double lam = uniform(rng, 0.0, 1.0);
        const double t = uniform(rng, 0.0, 2.5);
        const ConvexityResult res = convexity_map(r1, r2, lam, q, t);
        CHECK(res.lambda_prime >= -1e-12);
        CHECK(res.lambda_prime <= 1.0 + 1e-12);
        CHECK(res.identity_residual < 1e-10);
    }
}

TEST_CASE("embedded qubit dynamics reproduces the qubit riccati flow") {
    using V3 = Eigen::Vector3d;
    Rng rng(137);
    for (int n = 0; n < 4; ++n) {
        V3 a3(uniform(rng, -1, 1), uniform(rng, -1, 1), uniform(rng, -1, 1));
        V3 b3(uniform(rng, -0.7, 0.7), uniform(rng, -0.7, 0.7), uniform(rng, -0.7, 0.7));
        V3 z0(uniform(rng, -0.4, 0.4), uniform(rng, -0.4, 0.4), uniform(rng, -0.4, 0.4));
        Vec8 a = Vec8::Zero(), b = Vec8::Zero(), xi0 = Vec8::Zero();
        for (int i = 0; i < 3; ++i) {
            a[i] = a3[i];
            b[i] = b3[i];
            xi0[i] = kSqrt3 / 2.0 * z0[i];
        }
        xi0[7] = 0.5;
        const EvolutionParams p = EvolutionParams::make(a, b);
        const Trajectory traj = integrate(xi0, p, 20.0, 81);

        auto rhs = [&](const V3& z) { return qubit_rhs(z, a3, b3); };
        const OdeResult<V3> qubit = dopri5<V3>(rhs, z0, traj.times);

        for (size_t k = 0; k < traj.times.size(); ++k) {
            const Vec8& s = traj.states[k];
            CHECK(std::abs(s[7] - 0.5) < 1e-8);
            for (int i = 3; i < 7; ++i) CHECK(std::abs(s[i]) < 1e-8);
            for (int i = 0; i < 3; ++i)
                CHECK(2.0 / kSqrt3 * s[i] == Catch::Approx(qubit.states[k][i]).margin(1e-8));
        }
    }
}
