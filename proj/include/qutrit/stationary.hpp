#pragma once

// Stationary solutions of the Riccati flow and their stability.
//
// For the unitary (b = 0) flow the equilibrium set of each special case is
// the intersection of the plane { mu a + nu a*a } with the state space; for
// the dissipative special cases the known closed-form equilibria are
// cataloged together with descriptors for the continuous families that
// accompany degenerate generators.  Stability is judged from the spectrum
// of the analytic Jacobian, with zero modes that point along a manifold of
// neighboring equilibria counted separately ("neutral" modes): a linearly
// neutral direction in which every point is itself stationary does not
// spoil attraction toward the equilibrium set.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "evolution.hpp"
#include "state_space.hpp"

namespace qutrit {

struct NotStationary : std::runtime_error {
    explicit NotStationary(const std::string& what) : std::runtime_error(what) {}
};

inline constexpr double kEigTolerance = 1e-7;
inline constexpr double kStationaryResidual = 1e-9;

enum class Stability { AsymptoticallyStable, Unstable, Marginal };

inline const char* to_string(Stability s) {
    switch (s) {
        case Stability::AsymptoticallyStable: return "asymptotically-stable";
        case Stability::Unstable: return "unstable";
        case Stability::Marginal: return "marginal";
    }
    return "?";
}

struct StabilityOptions {
    double eig_tol = kEigTolerance;
    bool probe = true;        // integrate perturbed initial states
    int probe_count = 20;
    double probe_radius = 1e-3;
};

struct StabilityReport {
    Stability verdict = Stability::Marginal;
    Eigen::Matrix<Complex, 8, 1> spectrum;         // full Jacobian spectrum
    int neutral_modes = 0;                          // kernel directions tangent to equilibria
    double max_nonneutral_real = 0.0;
    std::vector<Complex> tangent_spectrum;          // pure equilibria: spectrum on the pure stratum
    // empirical probe: largest end distance of perturbed trajectories,
    // relative to the perturbation radius
    std::optional<double> probe_expansion;
};

namespace detail {

// Kernel directions of the Jacobian along which the flow field vanishes
// identically (not merely to quadratic order) mark a flat manifold of
// neighboring equilibria.  Any kernel direction makes the field O(eps^2),
// so the cut must sit well below eps^2 scale.
inline bool is_equilibrium_direction(const Vec8& xi, const EvolutionParams& p, const Vec8& v) {
    const double eps = 1e-4;
    const double scale = std::max({p.a.norm(), p.b.norm(), 1.0});
    const double r1 = riccati_rhs(xi + eps * v, p).norm();
    const double r2 = riccati_rhs(xi - eps * v, p).norm();
    return std::max(r1, r2) <= 1e-11 * scale;
}

}  // namespace detail

inline StabilityReport stability(const Vec8& xi, const EvolutionParams& p,
                                 const StabilityOptions& opts = {}) {
    const double residual = riccati_rhs(xi, p).norm();
    if (residual > kStationaryResidual)
        throw NotStationary("stability: rhs residual " + std::to_string(residual));

    StabilityReport rep;
    const Eigen::Matrix<double, 8, 8> jac = riccati_jacobian(xi, p);
    Eigen::EigenSolver<Eigen::Matrix<double, 8, 8>> es(jac);
    rep.spectrum = es.eigenvalues();

    // kernel directions via SVD; keep the ones tangent to an equilibrium set
    Eigen::JacobiSVD<Eigen::Matrix<double, 8, 8>> svd(jac, Eigen::ComputeFullV);
    std::vector<int> kernel_cols;
    for (int i = 0; i < 8; ++i)
        if (svd.singularValues()[i] < opts.eig_tol) kernel_cols.push_back(i);
    int neutral = 0;
    for (int col : kernel_cols) {
        const Vec8 v = svd.matrixV().col(col);
        if (detail::is_equilibrium_direction(xi, p, v)) ++neutral;
    }
    rep.neutral_modes = neutral;

    // order eigenvalues by |.|; discount as many of the smallest ones as
    // there are neutral kernel directions
    std::array<int, 8> order{};
    for (int i = 0; i < 8; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&rep](int l, int r) {
        return std::abs(rep.spectrum[l]) < std::abs(rep.spectrum[r]);
    });
    double max_real = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (int k = neutral; k < 8; ++k) {
        max_real = std::max(max_real, rep.spectrum[order[k]].real());
        any = true;
    }
    rep.max_nonneutral_real = any ? max_real : 0.0;
    if (!any)
        rep.verdict = Stability::Marginal;
    else if (max_real > opts.eig_tol)
        rep.verdict = Stability::Unstable;
    else if (max_real < -opts.eig_tol)
        rep.verdict = Stability::AsymptoticallyStable;
    else
        rep.verdict = Stability::Marginal;

    // spectrum restricted to the tangent space of the pure stratum
    if (classify(xi).tag == StateTag::PureBoundary) {
        const auto& t = structure_constants();
        Eigen::Matrix<double, 8, 8> star_op;
        for (int i = 0; i < 8; ++i)
            for (int k = 0; k < 8; ++k) {
                double s = 0.0;
                for (const auto& e_ : t.d_rows[i])
                    if (e_.k == k) s += e_.v * xi[e_.j];
                star_op(i, k) = kSqrt3 * s;
            }
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, 8, 8>> sev(star_op);
        std::vector<int> tangent_cols;
        for (int i = 0; i < 8; ++i)
            if (std::abs(sev.eigenvalues()[i] - 0.5) < 1e-6) tangent_cols.push_back(i);
        if (!tangent_cols.empty()) {
            Eigen::MatrixXd basis(8, tangent_cols.size());
            for (size_t c = 0; c < tangent_cols.size(); ++c)
                basis.col(c) = sev.eigenvectors().col(tangent_cols[c]);
            const Eigen::MatrixXd restricted = basis.transpose() * jac * basis;
            Eigen::EigenSolver<Eigen::MatrixXd> res(restricted);
            for (int i = 0; i < res.eigenvalues().size(); ++i)
                rep.tangent_spectrum.push_back(res.eigenvalues()[i]);
        }
    }

    if (opts.probe) {
        Rng rng(0xabcdu);
        const double horizon = 30.0 / std::max({p.a.norm(), p.b.norm(), 1.0});
        double worst = 0.0;
        for (int n = 0; n < opts.probe_count; ++n) {
            Vec8 dir = random_vec8(rng);
            dir.normalize();
            double eps = opts.probe_radius;
            Vec8 start = xi + eps * dir;
            for (int shrink = 0; shrink < 12 && classify(start).tag == StateTag::Invalid;
                 ++shrink) {
                eps *= 0.5;
                start = xi + eps * dir;
            }
            if (classify(start).tag == StateTag::Invalid) continue;
            const Trajectory traj = integrate(start, p, horizon, 9);
            worst = std::max(worst, (traj.states.back() - xi).norm() / eps);
        }
        rep.probe_expansion = worst;
    }
    return rep;
}

// --------------------------------------------------------------------------
// The stationary ansatz plane mu a + nu a*a  (unitary flow)
// --------------------------------------------------------------------------

// Membership polynomials of mu a + nu a*a expressed through the invariants
// a^2 and a.(a*a):
//   |xi|^2      = a^2 mu^2 + a^4 nu^2 + 2 a.(a*a) mu nu
//   xi.(xi*xi)  = a.(a*a) mu^3 + 3 a^4 mu^2 nu + 3 a^2 a.(a*a) mu nu^2
//                 + (2 [a.(a*a)]^2 - a^6) nu^3
struct AnsatzResiduals {
    double r_ball = 0.0;
    double r_det = 0.0;
};

inline AnsatzResiduals ansatz_residuals(double mu, double nu, const Vec8& a) {
    const double a2 = a.squaredNorm();
    const double c3 = cubic_invariant(a);
    AnsatzResiduals out;
    out.r_ball = a2 * mu * mu + a2 * a2 * nu * nu + 2.0 * c3 * mu * nu;
    const double cubic = c3 * mu * mu * mu + 3.0 * a2 * a2 * mu * mu * nu
        + 3.0 * a2 * c3 * mu * nu * nu + (2.0 * c3 * c3 - a2 * a2 * a2) * nu * nu * nu;
    out.r_det = 3.0 * out.r_ball - 2.0 * cubic;
    return out;
}

inline StateClass ansatz_classify(double mu, double nu, const Vec8& a,
                                  double tol = kGeomTolerance) {
    if (!(a.norm() > 0.0)) throw std::invalid_argument("ansatz_classify: |a| must be positive");
    const AnsatzResiduals res = ansatz_residuals(mu, nu, a);
    StateClass out;
    out.r_ball = res.r_ball;
    out.r_det = res.r_det;
    if (out.r_ball > 1.0 + tol || out.r_det > 1.0 + tol)
        out.tag = StateTag::Invalid;
    else if (std::abs(out.r_ball - 1.0) <= tol && std::abs(out.r_det - 1.0) <= tol)
        out.tag = StateTag::PureBoundary;
    else if (std::abs(out.r_det - 1.0) <= tol)
        out.tag = StateTag::MixedBoundary;
    else
        out.tag = StateTag::Interior;
    return out;
}

// --------------------------------------------------------------------------
// Diagonal-plane boundary equilibria
// --------------------------------------------------------------------------

// Mixed-boundary stationary points of the diagonal flow on the (xi3, xi8)
// plane at radius^2 = kappa: real roots of 8 x^3 - 6 kappa x + 3 kappa - 1 = 0
// paired with xi3 = +-sqrt(kappa - x^2), filtered to the closed state
// triangle.  Cardano branch for kappa <= 1/4, trigonometric branch above.
struct DiagonalPoint {
    double xi3 = 0.0;
    double xi8 = 0.0;
};

inline std::vector<DiagonalPoint> diagonal_boundary(double kappa) {
    if (!(kappa > 0.0 && kappa < 1.0))
        throw std::domain_error("diagonal_boundary: kappa must lie in (0, 1)");
    std::vector<double> roots;
    if (kappa <= 0.25) {
        const double half = 0.5 * (1.0 - 3.0 * kappa);
        const double disc = half * half - kappa * kappa * kappa;
        const double sq = std::sqrt(std::max(disc, 0.0));
        roots.push_back(0.5 * (std::cbrt(half + sq) + std::cbrt(half - sq)));
    } else {
        const double cos_alpha =
            std::clamp(-(3.0 * kappa - 1.0) / (2.0 * std::pow(kappa, 1.5)), -1.0, 1.0);
        const double third = std::acos(cos_alpha) / 3.0;
        const double sk = std::sqrt(kappa);
        roots.push_back(sk * std::cos(third));
        roots.push_back(-sk * std::cos(third + M_PI / 3.0));
        roots.push_back(-sk * std::cos(third - M_PI / 3.0));
    }
    // polish against the cubic 8 x^3 - 6 kappa x + 3 kappa - 1; a last-ulp
    // error in cbrt/cos would otherwise get amplified by the sqrt below
    for (double& x : roots)
        for (int it = 0; it < 3; ++it) {
            const double g = 8.0 * x * x * x - 6.0 * kappa * x + 3.0 * kappa - 1.0;
            const double gp = 24.0 * x * x - 6.0 * kappa;
            if (std::abs(gp) < 1e-12) break;
            x -= g / gp;
        }
    std::vector<DiagonalPoint> out;
    auto push_valid = [&out](double x3, double x8) {
        // all three density-matrix eigenvalues must be nonnegative
        const double n1 = (1.0 + kSqrt3 * x3 + x8) / 3.0;
        const double n2 = (1.0 - kSqrt3 * x3 + x8) / 3.0;
        const double n3 = (1.0 - 2.0 * x8) / 3.0;
        if (n1 < -1e-10 || n2 < -1e-10 || n3 < -1e-10) return;
        for (const auto& q : out)
            if (std::abs(q.xi3 - x3) < 1e-9 && std::abs(q.xi8 - x8) < 1e-9) return;
        out.push_back({x3, x8});
    };
    for (double x8 : roots) {
        double s2 = kappa - x8 * x8;
        if (s2 < -1e-12) continue;
        if (std::abs(s2) < 1e-13 * std::max(1.0, kappa)) s2 = 0.0;  // tangency
        const double x3 = std::sqrt(std::max(s2, 0.0));
        push_valid(x3, x8);
        push_valid(-x3, x8);
    }
    std::sort(out.begin(), out.end(), [](const DiagonalPoint& l, const DiagonalPoint& r) {
        if (l.xi8 != r.xi8) return l.xi8 > r.xi8;
        return l.xi3 > r.xi3;
    });
    return out;
}

// Strict interior of the diagonal-state triangle.  Points that satisfy the
// defining equalities up to rounding count as boundary, hence outside.
inline bool triangle_membership(double xi3, double xi8) {
    if (!std::isfinite(xi3) || !std::isfinite(xi8))
        throw std::invalid_argument("triangle_membership: non-finite input");
    const double ball = xi3 * xi3 + xi8 * xi8;
    const double det = 2.0 * xi8 * xi8 * xi8 - 6.0 * xi3 * xi3 * xi8 + 3.0 * ball;
    return ball < 1.0 - 1e-12 && det < 1.0 - 1e-12;
}

// --------------------------------------------------------------------------
// Catalog
// --------------------------------------------------------------------------

struct Equilibrium {
    Vec8 xi = Vec8::Zero();
    StateClass state_class;
    Stability stability = Stability::Marginal;
    std::string source;
    double rhs_residual = 0.0;
};

struct EquilibriumCatalog {
    std::vector<Equilibrium> points;
    std::vector<std::string> families;  // descriptors of continuous families
};

namespace detail {

inline void catalog_push(EquilibriumCatalog& cat, const EvolutionParams& p, const Vec8& xi,
                         std::string source, bool label_stability) {
    for (const auto& q : cat.points)
        if ((q.xi - xi).norm() < 1e-9) return;
    Equilibrium eq;
    eq.xi = xi;
    eq.state_class = classify(xi);
    eq.rhs_residual = riccati_rhs(xi, p).norm();
    eq.source = std::move(source);
    if (label_stability && eq.rhs_residual <= kStationaryResidual) {
        StabilityOptions opts;
        opts.probe = false;
        eq.stability = stability(xi, p, opts).verdict;
    }
    cat.points.push_back(std::move(eq));
}

// Projectors onto the degenerate eigenspace of g.lambda for star-type
// generators; the mixtures they span are all stationary.
inline void catalog_degenerate_ball(EquilibriumCatalog& cat, const EvolutionParams& p,
                                    const Vec8& g, bool lower_pair, bool label) {
    Eigen::SelfAdjointEigenSolver<CMat3> es(lambda_of(g));
    const int i0 = lower_pair ? 0 : 1;
    const Eigen::Vector3cd v1 = es.eigenvectors().col(i0);
    const Eigen::Vector3cd v2 = es.eigenvectors().col(i0 + 1);
    const auto push_proj = [&](const Eigen::Vector3cd& v, const char* name) {
        catalog_push(cat, p, density_to_bloch((v * v.adjoint()).eval()), name, label);
    };
    push_proj(v1, "degenerate-eigenspace pole");
    push_proj(v2, "degenerate-eigenspace pole");
    push_proj((v1 + v2).normalized(), "degenerate-eigenspace equator");
    push_proj((v1 + Complex(0, 1) * v2).normalized(), "degenerate-eigenspace equator");
    cat.families.push_back(
        "every mixture supported on the degenerate eigenspace of the generator is "
        "stationary (a qubit-ball family)");
}

}  // namespace detail

// All closed-form equilibria of a detected special case.  Continuous
// families are represented by sampled members plus a descriptor.
inline EquilibriumCatalog catalog(const EvolutionParams& p, bool label_stability = true,
                                  int family_samples = 5) {
    if (p.case_tag == CaseTag::General)
        throw UnsupportedCase("catalog: no closed-form catalog for the general case");
    EquilibriumCatalog cat;
    const Vec8& a = p.a;
    const Vec8& b = p.b;
    using detail::catalog_push;

    switch (p.case_tag) {
        case CaseTag::LinearStarPos:
        case CaseTag::LinearStarNeg: {
            const double sgn = p.case_tag == CaseTag::LinearStarPos ? 1.0 : -1.0;
            const double norm = a.norm();
            catalog_push(cat, p, sgn * a / norm, "a/|a| pure point", label_stability);
            catalog_push(cat, p, -sgn * a / (2.0 * norm), "-a/(2|a|) boundary point",
                         label_stability);
            for (int k = 1; k <= family_samples; ++k) {
                const double sigma = 2.0 * std::pow(50.0, double(k) / family_samples);
                catalog_push(cat, p, -sgn * a / (sigma * norm),
                             "-a/(sigma|a|) interior family", label_stability);
            }
            cat.families.push_back(
                "interior family -a/(sigma|a|) for sigma > 2 (sampled at 5 points)");
            break;
        }
        case CaseTag::LinearNullCubic: {
            const double norm = a.norm(), norm2 = a.squaredNorm();
            const Vec8 aa = star(a, a);
            catalog_push(cat, p, -aa / norm2, "-(a*a)/a^2 pure point", label_stability);
            catalog_push(cat, p, kSqrt3 / (2.0 * norm) * a + aa / (2.0 * norm2),
                         "+sqrt3 a/(2|a|) + (a*a)/(2a^2) pure point", label_stability);
            catalog_push(cat, p, -kSqrt3 / (2.0 * norm) * a + aa / (2.0 * norm2),
                         "-sqrt3 a/(2|a|) + (a*a)/(2a^2) pure point", label_stability);
            catalog_push(cat, p, a / (kSqrt3 * norm), "+a/(sqrt3|a|) boundary point",
                         label_stability);
            catalog_push(cat, p, -a / (kSqrt3 * norm), "-a/(sqrt3|a|) boundary point",
                         label_stability);
            for (double su : {1.0, -1.0})
                for (double sv : {1.0, -1.0})
                    catalog_push(cat, p,
                                 su * a / (2.0 * kSqrt3 * norm) + sv * aa / (2.0 * norm2),
                                 "+-a/(2 sqrt3|a|) +- (a*a)/(2a^2) boundary point",
                                 label_stability);
            for (int k = 1; k <= family_samples; ++k) {
                const double nu = double(k) / (family_samples + 1) / (2.0 * norm2);
                const double mu = std::sqrt(std::max(1.0 / 3.0 - norm2 * norm2 * nu * nu, 0.0))
                    / norm;
                catalog_push(cat, p, mu * a + nu * aa, "interior ellipse-arc family (mu > 0)",
                             label_stability);
                catalog_push(cat, p, -mu * a + nu * aa, "interior ellipse-arc family (mu < 0)",
                             label_stability);
            }
            cat.families.push_back(
                "interior arc a^2 mu^2 + a^4 nu^2 = 1/3, 0 < nu < 1/(2a^2), both signs of mu");
            break;
        }
        case CaseTag::LinearDiagonal: {
            Vec8 v1 = Vec8::Zero(), v2 = Vec8::Zero(), v3 = Vec8::Zero();
            v1[2] = kSqrt3 / 2.0;
            v1[7] = 0.5;
            v2[2] = -kSqrt3 / 2.0;
            v2[7] = 0.5;
            v3[7] = -1.0;
            catalog_push(cat, p, v1, "diagonal vertex (+sqrt3/2, 1/2)", label_stability);
            catalog_push(cat, p, v2, "diagonal vertex (-sqrt3/2, 1/2)", label_stability);
            catalog_push(cat, p, v3, "diagonal vertex (0, -1)", label_stability);
            for (double kappa : {0.35, 0.55, 0.8}) {
                for (const DiagonalPoint& q : diagonal_boundary(kappa)) {
                    Vec8 xi = Vec8::Zero();
                    xi[2] = q.xi3;
                    xi[7] = q.xi8;
                    catalog_push(cat, p, xi, "diagonal boundary-curve family", label_stability);
                }
            }
            for (double x3 : {-0.3, 0.0, 0.3})
                for (double x8 : {-0.25, 0.1, 0.35})
                    if (triangle_membership(x3, x8)) {
                        Vec8 xi = Vec8::Zero();
                        xi[2] = x3;
                        xi[7] = x8;
                        catalog_push(cat, p, xi, "diagonal interior family", label_stability);
                    }
            cat.families.push_back(
                "every diagonal vector inside the closed state triangle is stationary");
            break;
        }
        case CaseTag::NonlinStarPos: {
            const double norm = b.norm();
            catalog_push(cat, p, b / norm, "b/|b| pure attractor", label_stability);
            catalog_push(cat, p, -b / (2.0 * norm), "-b/(2|b|) boundary point",
                         label_stability);
            detail::catalog_degenerate_ball(cat, p, b, true, label_stability);
            cat.families.push_back(
                "the catalog of non-attracting equilibria is not known to be complete; "
                "use the numeric search for additional points");
            break;
        }
        case CaseTag::NonlinStarNeg: {
            const double norm = b.norm();
            catalog_push(cat, p, b / (2.0 * norm), "b/(2|b|) boundary attractor",
                         label_stability);
            catalog_push(cat, p, -b / norm, "-b/|b| pure repeller", label_stability);
            detail::catalog_degenerate_ball(cat, p, b, false, label_stability);
            break;
        }
        case CaseTag::NonlinNullCubic: {
            const double norm = b.norm(), norm2 = b.squaredNorm();
            const Vec8 bb = star(b, b);
            catalog_push(cat, p, kSqrt3 / (2.0 * norm) * b + bb / (2.0 * norm2),
                         "+sqrt3 b/(2|b|) + (b*b)/(2b^2) pure attractor", label_stability);
            catalog_push(cat, p, -kSqrt3 / (2.0 * norm) * b + bb / (2.0 * norm2),
                         "-sqrt3 b/(2|b|) + (b*b)/(2b^2) pure point", label_stability);
            catalog_push(cat, p, -bb / norm2, "-(b*b)/b^2 pure point", label_stability);
            break;
        }
        case CaseTag::NonlinDiagonal: {
            Vec8 v1 = Vec8::Zero(), v2 = Vec8::Zero(), v3 = Vec8::Zero();
            v1[2] = kSqrt3 / 2.0;
            v1[7] = 0.5;
            v2[2] = -kSqrt3 / 2.0;
            v2[7] = 0.5;
            v3[7] = -1.0;
            catalog_push(cat, p, v1, "diagonal vertex (+sqrt3/2, 1/2)", label_stability);
            catalog_push(cat, p, v2, "diagonal vertex (-sqrt3/2, 1/2)", label_stability);
            catalog_push(cat, p, v3, "diagonal vertex (0, -1)", label_stability);
            break;
        }
        case CaseTag::Rational: {
            const Vec8 xi = 0.5 * (star(a, a) + wedge(a, b)) / a.squaredNorm();
            catalog_push(cat, p, xi, "rational-flow limit point", label_stability);
            break;
        }
        case CaseTag::General:
            break;
    }
    return cat;
}

// --------------------------------------------------------------------------
// Numeric equilibrium search (general case fallback)
// --------------------------------------------------------------------------

struct NewtonSearchOptions {
    int grid = 5;              // ansatz grid per axis over [-2, 2]
    int random_seeds = 40;
    int max_iterations = 60;
    double target_residual = 1e-12;
    double dedupe_distance = 1e-6;
};

inline std::vector<Equilibrium> find_equilibria(const EvolutionParams& p, std::uint64_t seed,
                                                const NewtonSearchOptions& opts = {}) {
    std::vector<Vec8> seeds;
    for (const Vec8& g : {p.a, p.b}) {
        if (g.norm() < 1e-12) continue;
        const Vec8 gg = star(g, g);
        for (int i = 0; i < opts.grid; ++i)
            for (int j = 0; j < opts.grid; ++j) {
                const double mu = -2.0 + 4.0 * i / (opts.grid - 1);
                const double nu = -2.0 + 4.0 * j / (opts.grid - 1);
                seeds.push_back(mu * g / g.norm() + nu * gg / g.squaredNorm());
            }
    }
    Rng rng(seed);
    for (int n = 0; n < opts.random_seeds; ++n) seeds.push_back(random_state(rng));

    std::vector<Equilibrium> found;
    for (const Vec8& start : seeds) {
        Vec8 xi = start;
        bool converged = false;
        for (int it = 0; it < opts.max_iterations; ++it) {
            const Vec8 rhs = riccati_rhs(xi, p);
            if (rhs.norm() < opts.target_residual) {
                converged = true;
                break;
            }
            const Eigen::Matrix<double, 8, 8> jac = riccati_jacobian(xi, p);
            const Vec8 delta = jac.fullPivLu().solve(-rhs);
            if (!delta.allFinite()) break;
            double step = 1.0;
            const double base = rhs.norm();
            bool improved = false;
            for (int back = 0; back < 30; ++back) {
                const Vec8 trial = xi + step * delta;
                if (trial.allFinite() && riccati_rhs(trial, p).norm() < base) {
                    xi = trial;
                    improved = true;
                    break;
                }
                step *= 0.5;
            }
            if (!improved) break;
        }
        if (!converged) continue;
        if (classify(xi).tag == StateTag::Invalid) continue;
        bool duplicate = false;
        for (const auto& q : found)
            if ((q.xi - xi).norm() < opts.dedupe_distance) duplicate = true;
        if (duplicate) continue;
        Equilibrium eq;
        eq.xi = xi;
        eq.state_class = classify(xi);
        eq.rhs_residual = riccati_rhs(xi, p).norm();
        eq.source = "newton search";
        StabilityOptions sopts;
        sopts.probe = false;
        eq.stability = stability(xi, p, sopts).verdict;
        found.push_back(std::move(eq));
    }
    std::sort(found.begin(), found.end(), [](const Equilibrium& l, const Equilibrium& r) {
        if (l.xi.norm() != r.xi.norm()) return l.xi.norm() < r.xi.norm();
        return std::lexicographical_compare(l.xi.data(), l.xi.data() + 8, r.xi.data(),
                                            r.xi.data() + 8);
    });
    return found;
}

}  // namespace qutrit
