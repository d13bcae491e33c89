#include <catch2/catch_amalgamated.hpp>

#include "qutrit/random.hpp"
#include "qutrit/stationary.hpp"

using namespace qutrit;

namespace {
Vec8 e(int i) { return unit_vector(i - 1); }

Vec8 diag_vec(double x3, double x8) {
    Vec8 v = Vec8::Zero();
    v[2] = x3;
    v[7] = x8;
    return v;
}
}  // namespace

TEST_CASE("ansatz residual polynomials agree with direct classification") {
    Rng rng(139);
    for (int n = 0; n < 400; ++n) {
        const Vec8 a = random_vec8(rng);
        if (a.norm() < 0.2) continue;
        const double mu = uniform(rng, -1.5, 1.5);
        const double nu = uniform(rng, -1.5, 1.5);
        const Vec8 xi = mu * a + nu * star(a, a);
        const AnsatzResiduals res = ansatz_residuals(mu, nu, a);
        const StateClass direct = classify(xi);
        CHECK(res.r_ball == Catch::Approx(direct.r_ball).margin(1e-10));
        CHECK(res.r_det == Catch::Approx(direct.r_det).margin(1e-9));
        CHECK(ansatz_classify(mu, nu, a).tag == direct.tag);
    }
}

TEST_CASE("ansatz classification anchors") {
    Rng rng(149);
    const Vec8 generic = random_vec8(rng);
    CHECK(ansatz_classify(0.0, 0.0, generic).tag == StateTag::Interior);

    const Vec8 apos = random_case_generator(detail::SingleCase::StarPos, rng);
    CHECK(ansatz_classify(1.0 / apos.norm(), 0.0, apos).tag == StateTag::PureBoundary);

    const Vec8 anull = random_case_generator(detail::SingleCase::NullCubic, rng);
    CHECK(ansatz_classify(0.0, -1.0 / anull.squaredNorm(), anull).tag
          == StateTag::PureBoundary);
}

TEST_CASE("diagonal boundary points") {
    CHECK_THROWS_AS(diagonal_boundary(0.0), std::domain_error);
    CHECK_THROWS_AS(diagonal_boundary(1.0), std::domain_error);
    CHECK_THROWS_AS(diagonal_boundary(-0.5), std::domain_error);

    SECTION("tangency point at kappa = 1/4") {
        const auto pts = diagonal_boundary(0.25);
        REQUIRE(pts.size() == 1);
        CHECK(pts[0].xi3 == Catch::Approx(0.0).margin(1e-9));
        CHECK(pts[0].xi8 == Catch::Approx(0.5).margin(1e-12));
    }
    SECTION("six points at kappa = 1/3") {
        const auto pts = diagonal_boundary(1.0 / 3.0);
        REQUIRE(pts.size() == 6);
        const double s = 1.0 / (2.0 * kSqrt3);
        // sorted by xi8 descending, xi3 descending
        CHECK(pts[0].xi8 == Catch::Approx(0.5).margin(1e-12));
        CHECK(pts[0].xi3 == Catch::Approx(s).margin(1e-12));
        CHECK(pts[1].xi3 == Catch::Approx(-s).margin(1e-12));
        CHECK(pts[2].xi8 == Catch::Approx(0.0).margin(1e-12));
        CHECK(pts[2].xi3 == Catch::Approx(1.0 / kSqrt3).margin(1e-12));
        CHECK(pts[4].xi8 == Catch::Approx(-0.5).margin(1e-12));
    }
    SECTION("points satisfy the boundary cubic and stay in the state triangle") {
        for (double kappa : {0.05, 0.2, 0.26, 0.4, 0.6, 0.85, 0.99}) {
            for (const auto& q : diagonal_boundary(kappa)) {
                const double det = 2.0 * std::pow(q.xi8, 3) - 6.0 * q.xi3 * q.xi3 * q.xi8
                    + 3.0 * (q.xi3 * q.xi3 + q.xi8 * q.xi8);
                CHECK(det == Catch::Approx(1.0).margin(1e-10));
                CHECK(q.xi3 * q.xi3 + q.xi8 * q.xi8 == Catch::Approx(kappa).margin(1e-10));
                CHECK(classify(diag_vec(q.xi3, q.xi8)).tag != StateTag::Invalid);
                CHECK_FALSE(triangle_membership(q.xi3, q.xi8));  // they sit on the edge
            }
        }
    }
    SECTION("below kappa = 1/4 the circle misses the boundary") {
        CHECK(diagonal_boundary(0.1).empty());
        CHECK(diagonal_boundary(0.24).empty());
    }
}

TEST_CASE("triangle membership") {
    CHECK(triangle_membership(0.0, 0.0));
    CHECK_FALSE(triangle_membership(-kSqrt3 / 2.0, 0.5));  // vertex
    CHECK_FALSE(triangle_membership(0.0, 0.99));
    CHECK(triangle_membership(0.1, -0.2));
    CHECK_FALSE(triangle_membership(0.0, -1.0));  // vertex
    CHECK_THROWS_AS(triangle_membership(std::nan(""), 0.0), std::invalid_argument);
}

TEST_CASE("every cataloged equilibrium annihilates the flow field") {
    Rng rng(151);
    const CaseTag cases[] = {CaseTag::LinearStarPos,  CaseTag::LinearStarNeg,
                             CaseTag::LinearNullCubic, CaseTag::LinearDiagonal,
                             CaseTag::NonlinStarPos,  CaseTag::NonlinStarNeg,
                             CaseTag::NonlinNullCubic, CaseTag::NonlinDiagonal,
                             CaseTag::Rational};
    for (CaseTag tag : cases) {
        for (int n = 0; n < 4; ++n) {
            const EvolutionParams p = random_case_params(tag, rng);
            const EquilibriumCatalog cat = catalog(p, /*label_stability=*/false);
            CHECK_FALSE(cat.points.empty());
            for (const auto& eq : cat.points) {
                INFO(to_string(tag) << " : " << eq.source);
                CHECK(eq.rhs_residual < 1e-9);
                CHECK(eq.state_class.tag != StateTag::Invalid);
            }
        }
    }
    const EvolutionParams general =
        EvolutionParams::make(random_vec8(rng), random_vec8(rng));
    CHECK_THROWS_AS(catalog(general), UnsupportedCase);
}

TEST_CASE("unitary star-positive catalog matches the reference structure") {
    const EvolutionParams p = EvolutionParams::make(-e(8), Vec8::Zero());
    REQUIRE(p.case_tag == CaseTag::LinearStarPos);
    const EquilibriumCatalog cat = catalog(p);
    bool has_pure = false, has_half = false;
    int family = 0;
    for (const auto& eq : cat.points) {
        if ((eq.xi + e(8)).norm() < 1e-12) {
            has_pure = true;
            CHECK(eq.state_class.tag == StateTag::PureBoundary);
        }
        if ((eq.xi - 0.5 * e(8)).norm() < 1e-12) {
            has_half = true;
            CHECK(eq.state_class.tag == StateTag::MixedBoundary);
        }
        if (eq.source.find("sigma") != std::string::npos) {
            ++family;
            CHECK(eq.state_class.tag == StateTag::Interior);
            CHECK(eq.xi.norm() < 0.5);
        }
        // the unitary flow conserves |xi|^2: no attraction is possible
        CHECK(eq.stability == Stability::Marginal);
    }
    CHECK(has_pure);
    CHECK(has_half);
    CHECK(family == 5);
}

TEST_CASE("dissipative stability labels match the qualitative claims") {
    Rng rng(157);

    SECTION("star-positive: pure attractor, boundary point not attracting") {
        for (int n = 0; n < 3; ++n) {
            const EvolutionParams p = random_case_params(CaseTag::NonlinStarPos, rng);
            const Vec8 ball = p.b / p.b.norm();
            StabilityOptions opts;
            opts.probe = false;
            CHECK(stability(ball, p, opts).verdict == Stability::AsymptoticallyStable);
            CHECK(stability(-0.5 * ball, p, opts).verdict == Stability::Unstable);
        }
    }
    SECTION("star-negative: boundary attractor modulo its equilibrium ball") {
        for (int n = 0; n < 3; ++n) {
            const EvolutionParams p = random_case_params(CaseTag::NonlinStarNeg, rng);
            const Vec8 unit = p.b / p.b.norm();
            StabilityOptions opts;
            opts.probe = false;
            const StabilityReport rep = stability(0.5 * unit, p, opts);
            CHECK(rep.verdict == Stability::AsymptoticallyStable);
            CHECK(rep.neutral_modes == 3);
            CHECK(stability(-unit, p, opts).verdict == Stability::Unstable);
        }
    }
    SECTION("null-cubic: one pure attractor, two unstable pure points") {
        for (int n = 0; n < 3; ++n) {
            const EvolutionParams p = random_case_params(CaseTag::NonlinNullCubic, rng);
            const double norm = p.b.norm(), norm2 = p.b.squaredNorm();
            const Vec8 bb = star(p.b, p.b);
            StabilityOptions opts;
            opts.probe = false;
            CHECK(stability(kSqrt3 / (2 * norm) * p.b + bb / (2 * norm2), p, opts).verdict
                  == Stability::AsymptoticallyStable);
            CHECK(stability(-kSqrt3 / (2 * norm) * p.b + bb / (2 * norm2), p, opts).verdict
                  == Stability::Unstable);
            CHECK(stability(-bb / norm2, p, opts).verdict == Stability::Unstable);
        }
    }
    SECTION("diagonal: the vertex aligned with the dominant rate attracts") {
        Vec8 b = diag_vec(0.9, 0.25);  // g1 dominant
        const EvolutionParams p = EvolutionParams::make(Vec8::Zero(), b);
        REQUIRE(p.case_tag == CaseTag::NonlinDiagonal);
        StabilityOptions opts;
        opts.probe = false;
        CHECK(stability(diag_vec(kSqrt3 / 2, 0.5), p, opts).verdict
              == Stability::AsymptoticallyStable);
        CHECK(stability(diag_vec(-kSqrt3 / 2, 0.5), p, opts).verdict == Stability::Unstable);
        CHECK(stability(diag_vec(0.0, -1.0), p, opts).verdict == Stability::Unstable);
    }
    SECTION("unitary flow: every equilibrium is marginal") {
        for (CaseTag tag : {CaseTag::LinearStarPos, CaseTag::LinearNullCubic}) {
            const EvolutionParams p = random_case_params(tag, rng);
            for (const auto& eq : catalog(p).points) CHECK(eq.stability == Stability::Marginal);
        }
    }
}

TEST_CASE("stability rejects non-stationary points") {
    Rng rng(163);
    const EvolutionParams p = random_case_params(CaseTag::NonlinStarPos, rng);
    CHECK_THROWS_AS(stability(0.9 * p.b / p.b.norm(), p), NotStationary);
}

TEST_CASE("stability probe tracks the spectrum verdict") {
    Rng rng(167);
    const EvolutionParams p = random_case_params(CaseTag::NonlinStarPos, rng);
    const StabilityReport rep = stability(p.b / p.b.norm(), p);
    REQUIRE(rep.probe_expansion.has_value());
    CHECK(*rep.probe_expansion < 0.5);  // perturbations contract toward the attractor

    const StabilityReport bad = stability(-0.5 * p.b / p.b.norm(), p);
    REQUIRE(bad.probe_expansion.has_value());
    CHECK(*bad.probe_expansion > 10.0);  // perturbations escape
}

TEST_CASE("unitary star-positive flow does not attract toward its pure point") {
    Rng rng(173);
    const EvolutionParams p = random_case_params(CaseTag::LinearStarPos, rng);
    const Vec8 attractor_candidate = p.a / p.a.norm();
    const Vec8 xi0 = random_state(rng);
    const double period = 2.0 * M_PI / (kSqrt3 * p.a.norm());
    const double d0 = (xi0 - attractor_candidate).norm();
    // distance to the candidate is periodic, not decaying
    const Vec8 later = closed_form(xi0, p, 7.0 * period);
    CHECK((later - xi0).norm() < 1e-9);
    CHECK((closed_form(xi0, p, 3.17 * period) - attractor_candidate).norm()
          > 0.2 * d0);
}

TEST_CASE("basin counterexamples of the star-negative attractor") {
    Vec8 b = diag_vec(kSqrt3 / 2.0, -0.5);
    const EvolutionParams p = EvolutionParams::make(Vec8::Zero(), b);
    REQUIRE(p.case_tag == CaseTag::NonlinStarNeg);

    const Vec8 start1 = diag_vec(0.5, 0.5);
    const Vec8 target1 = diag_vec(kSqrt3 / 2.0, 0.5);
    const Vec8 limit1 = closed_form(start1, p, 30.0);
    CHECK((limit1 - target1).cwiseAbs().maxCoeff() < 1e-4);

    const Vec8 start2 = diag_vec(0.5 * (1.0 - kSqrt3), 0.5 * (1.0 - kSqrt3));
    const Vec8 target2 = -e(8);
    const Vec8 limit2 = closed_form(start2, p, 30.0);
    CHECK((limit2 - target2).cwiseAbs().maxCoeff() < 1e-4);

    // both limit points are cataloged equilibria of this case
    const EquilibriumCatalog cat = catalog(p);
    bool found1 = false, found2 = false;
    for (const auto& eq : cat.points) {
        if ((eq.xi - target1).norm() < 1e-9) found1 = true;
        if ((eq.xi - target2).norm() < 1e-9) found2 = true;
    }
    CHECK(found1);
    CHECK(found2);
}

TEST_CASE("newton search recovers cataloged equilibria and the damped-flow target") {
    Rng rng(179);
    const EvolutionParams p = random_case_params(CaseTag::NonlinNullCubic, rng);
    const auto found = find_equilibria(p, 7);
    const EquilibriumCatalog cat = catalog(p, false);
    for (const auto& eq : cat.points) {
        bool hit = false;
        for (const auto& f : found)
            if ((f.xi - eq.xi).norm() < 1e-6) hit = true;
        INFO(eq.source);
        CHECK(hit);
    }
    for (const auto& f : found) CHECK(f.rhs_residual < 1e-10);

    // general-case parameters of the damped quasiperiodic run
    Vec8 a, b;
    a << 1, 0, -1, 0, 2, -1, 1, -1;
    b.setConstant(0.1);
    const EvolutionParams gen = EvolutionParams::make(a, b);
    REQUIRE(gen.case_tag == CaseTag::General);
    Vec8 reference;
    reference << 0.284966, -0.168841, -0.042086, -0.035279, 0.556160, -0.356250, 0.522711,
        -0.421682;
    const auto numeric = find_equilibria(gen, 11);
    bool hit = false;
    for (const auto& f : numeric)
        if ((f.xi - reference).cwiseAbs().maxCoeff() < 1e-4) hit = true;
    CHECK(hit);
}
