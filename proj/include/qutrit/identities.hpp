#pragma once

// Randomized verification of the su(3) wedge/star identity family and of
// the matrix relations that tie both products back to the Gell-Mann basis.
// Each check reports its maximum componentwise residual over a seeded batch
// of draws.  Residual names describe the content of the identity, e.g.
// "wedge_norm" is (a^b)^2 = 2[a^2 b^2 - (a.b)^2] + (a*a).(b*b) - (a*b)^2.

#include <cstdint>
#include <string>
#include <vector>

#include "algebra.hpp"
#include "random.hpp"

namespace qutrit {

struct IdentityCheck {
    std::string name;
    double max_residual = 0.0;
    double tolerance = 1e-10;
    bool pass = true;
};

// Largest deviation between the trace-generated structure constants and the
// antisymmetrized/symmetrized closure of the tabulated independent entries.
inline double structure_constant_deviation() {
    const auto& t = structure_constants();
    double f_ref[8][8][8] = {};
    double d_ref[8][8][8] = {};
    struct Item {
        int i, j, k;
        double v;
    };
    const double s3 = kSqrt3;
    const std::vector<Item> f_list = {
        {1, 2, 3, 1.0},       {4, 5, 8, s3 / 2.0},  {6, 7, 8, s3 / 2.0},
        {1, 4, 7, 0.5},       {2, 4, 6, 0.5},       {2, 5, 7, 0.5},
        {3, 4, 5, 0.5},       {5, 1, 6, 0.5},       {6, 3, 7, 0.5},
    };
    const std::vector<Item> d_list = {
        {1, 1, 8, 1.0 / s3},        {2, 2, 8, 1.0 / s3},        {3, 3, 8, 1.0 / s3},
        {8, 8, 8, -1.0 / s3},       {4, 4, 8, -0.5 / s3},       {5, 5, 8, -0.5 / s3},
        {6, 6, 8, -0.5 / s3},       {7, 7, 8, -0.5 / s3},       {1, 4, 6, 0.5},
        {1, 5, 7, 0.5},             {2, 4, 7, -0.5},            {2, 5, 6, 0.5},
        {3, 4, 4, 0.5},             {3, 5, 5, 0.5},             {3, 6, 6, -0.5},
        {3, 7, 7, -0.5},
    };
    const int perms[6][3] = {{0, 1, 2}, {1, 2, 0}, {2, 0, 1}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}};
    const double signs[6] = {1, 1, 1, -1, -1, -1};
    for (const auto& it : f_list) {
        const int idx[3] = {it.i - 1, it.j - 1, it.k - 1};
        for (int p = 0; p < 6; ++p)
            f_ref[idx[perms[p][0]]][idx[perms[p][1]]][idx[perms[p][2]]] = signs[p] * it.v;
    }
    for (const auto& it : d_list) {
        const int idx[3] = {it.i - 1, it.j - 1, it.k - 1};
        for (int p = 0; p < 6; ++p)
            d_ref[idx[perms[p][0]]][idx[perms[p][1]]][idx[perms[p][2]]] = it.v;
    }
    double worst = 0.0;
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j)
            for (int k = 0; k < 8; ++k) {
                worst = std::max(worst, std::abs(t.f[i][j][k] - f_ref[i][j][k]));
                worst = std::max(worst, std::abs(t.d[i][j][k] - d_ref[i][j][k]));
            }
    return worst;
}

namespace detail {

inline double vec_residual(const Vec8& v) { return v.cwiseAbs().maxCoeff(); }
inline double mat_residual(const CMat3& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace detail

inline std::vector<IdentityCheck> run_identity_suite(std::uint64_t seed, int count,
                                                     double tol = 1e-10) {
    if (count < 1) throw std::invalid_argument("run_identity_suite: count must be >= 1");
    Rng rng(seed);
    const Complex i1(0.0, 1.0);

    std::vector<IdentityCheck> checks;
    auto add = [&checks, tol](const char* name) -> double& {
        checks.push_back({name, 0.0, tol, true});
        return checks.back().max_residual;
    };
    double& wedge_antisym = add("wedge_antisymmetry");
    double& star_sym = add("star_symmetry");
    double& jacobi = add("wedge_jacobi");
    double& wedge_of_wedge = add("wedge_of_wedge");
    double& wedge_norm = add("wedge_norm");
    double& star_wedge_cyclic = add("star_wedge_cyclic");
    double& star_wedge_exchange = add("star_wedge_exchange");
    double& wedge_star_pairing = add("wedge_star_pairing");
    double& self_star_wedge = add("self_star_wedge_null");
    double& star_cyclic = add("star_cyclic");
    double& star_self = add("star_self_absorption");
    double& star_square = add("star_square_expansion");
    double& triple_wedge = add("scalar_triple_wedge");
    double& triple_star = add("scalar_triple_star");
    double& star_norm = add("star_norm");
    double& mat_product = add("matrix_product_expansion");
    double& mat_comm = add("matrix_commutator");
    double& mat_anticomm = add("matrix_anticommutator");
    double& mat_triple = add("matrix_triple_product");
    double& mat_sandwich = add("matrix_sandwich_product");
    double& mat_cube = add("matrix_cube");
    double& trace_orth = add("trace_orthogonality");
    double& trace_sq = add("trace_square_invariant");
    double& trace_cu = add("trace_cube_invariant");
    double& det_inv = add("determinant_invariant");

    {
        const auto& l = gell_mann();
        for (int j = 0; j < 8; ++j)
            for (int k = 0; k < 8; ++k) {
                const double want = j == k ? 2.0 : 0.0;
                trace_orth = std::max(trace_orth,
                                      std::abs((l[j] * l[k]).trace() - Complex(want, 0.0)));
            }
    }

    for (int n = 0; n < count; ++n) {
        const Vec8 a = random_vec8(rng);
        const Vec8 b = random_vec8(rng);
        const Vec8 c = random_vec8(rng);
        const Vec8 ab_w = wedge(a, b), ab_s = star(a, b);
        const Vec8 aa = star(a, a), bb = star(b, b);
        const double a2 = a.squaredNorm(), b2 = b.squaredNorm();
        using detail::mat_residual;
        using detail::vec_residual;

        wedge_antisym = std::max(wedge_antisym, vec_residual(ab_w + wedge(b, a)));
        star_sym = std::max(star_sym, vec_residual(ab_s - star(b, a)));
        jacobi = std::max(jacobi, vec_residual(wedge(a, wedge(b, c)) + wedge(b, wedge(c, a))
                                               + wedge(c, wedge(a, b))));
        wedge_of_wedge = std::max(
            wedge_of_wedge,
            vec_residual(wedge(a, wedge(b, c)) - 2.0 * (b * a.dot(c) - c * a.dot(b))
                         - star(b, star(a, c)) + star(c, star(a, b))));
        wedge_norm = std::max(
            wedge_norm,
            std::abs(ab_w.squaredNorm() - 2.0 * (a2 * b2 - a.dot(b) * a.dot(b))
                     - (aa.dot(bb) - ab_s.squaredNorm())));
        star_wedge_cyclic = std::max(
            star_wedge_cyclic,
            vec_residual(wedge(a, star(b, c)) + wedge(b, star(c, a)) + wedge(c, star(a, b))));
        star_wedge_exchange = std::max(
            star_wedge_exchange,
            vec_residual(wedge(a, star(b, c)) + star(c, wedge(b, a)) + star(b, wedge(c, a))));
        wedge_star_pairing = std::max(
            wedge_star_pairing,
            vec_residual(wedge(b, star(a, c)) + wedge(c, star(a, b)) - star(c, wedge(b, a))
                         - star(b, wedge(c, a))));
        self_star_wedge = std::max(self_star_wedge, vec_residual(wedge(a, aa)));
        star_cyclic = std::max(
            star_cyclic,
            vec_residual(star(a, star(b, c)) + star(b, star(c, a)) + star(c, star(a, b))
                         - a * b.dot(c) - b * c.dot(a) - c * a.dot(b)));
        star_self = std::max(star_self, vec_residual(star(a, aa) - a2 * a));
        star_square = std::max(
            star_square,
            vec_residual(star(aa, aa) - 2.0 * cubic_invariant(a) * a + a2 * aa));
        triple_wedge = std::max(
            triple_wedge, std::max(std::abs(a.dot(wedge(b, c)) - b.dot(wedge(c, a))),
                                   std::abs(a.dot(wedge(b, c)) - c.dot(ab_w))));
        triple_star = std::max(
            triple_star, std::max(std::abs(a.dot(star(b, c)) - b.dot(star(c, a))),
                                  std::abs(a.dot(star(b, c)) - c.dot(ab_s))));
        star_norm = std::max(star_norm, std::abs(aa.squaredNorm() - a2 * a2));

        const CMat3 la = lambda_of(a), lb = lambda_of(b), lc = lambda_of(c);
        const CMat3 eye = CMat3::Identity();
        mat_product = std::max(
            mat_product,
            mat_residual(la * lb - (2.0 / 3.0) * a.dot(b) * eye
                         - lambda_of(ab_s) / kSqrt3 - i1 * lambda_of(ab_w) / kSqrt3));
        mat_comm = std::max(
            mat_comm,
            mat_residual(la * lb - lb * la - (2.0 * i1 / kSqrt3) * lambda_of(ab_w)));
        mat_anticomm = std::max(
            mat_anticomm,
            mat_residual(la * lb + lb * la - (4.0 / 3.0) * a.dot(b) * eye
                         - (2.0 / kSqrt3) * lambda_of(ab_s)));
        {
            const Complex scalar =
                (2.0 / (3.0 * kSqrt3)) * Complex(c.dot(ab_s), c.dot(ab_w));
            const Vec8 real_vec = -(star(b, star(a, c)) - star(c, star(a, b)) - star(a, star(b, c))) / 3.0
                - 2.0 / 3.0 * (b * a.dot(c) - c * a.dot(b) - a * b.dot(c));
            const Vec8 imag_vec = (star(c, ab_w) - wedge(c, ab_s)) / 3.0;
            mat_triple = std::max(
                mat_triple, mat_residual(la * lb * lc - scalar * eye - lambda_of(real_vec)
                                         - i1 * lambda_of(imag_vec)));
        }
        mat_sandwich = std::max(
            mat_sandwich,
            mat_residual(la * lb * la - (2.0 / (3.0 * kSqrt3)) * a.dot(star(a, b)) * eye
                         - lambda_of(-2.0 / 3.0 * star(b, aa) - a2 / 3.0 * b
                                     + 2.0 * a.dot(b) * a)));
        mat_cube = std::max(
            mat_cube, mat_residual(la * la * la - (2.0 / (3.0 * kSqrt3)) * cubic_invariant(a) * eye
                                   - a2 * la));
        trace_sq = std::max(trace_sq, std::abs(0.5 * (la * la).trace().real() - a2));
        trace_cu = std::max(
            trace_cu,
            std::abs(0.5 * kSqrt3 * (la * la * la).trace().real() - cubic_invariant(a)));
        det_inv = std::max(det_inv, std::abs(la.determinant().real()
                                             - 2.0 / (3.0 * kSqrt3) * cubic_invariant(a)));
    }

    for (auto& chk : checks) chk.pass = chk.max_residual < chk.tolerance;
    return checks;
}

}  // namespace qutrit
