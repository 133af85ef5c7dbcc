#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "points.hpp"

using namespace toda;
using namespace toda::testing;

namespace {
const std::vector<AlphaHat> kFamilies = {ah_int(2),  ah_int(1),  ah_int(0), ah_int(-1),
                                         ah_int(-2), ah_int(-3), ah_v(),    ah_u()};
}

TEST_CASE("theta coefficients: direct Q-mean equals Cauchy extraction") {
    LaxPoint pt = sample_point();
    for (auto& ah : kFamilies)
        for (int p : {0, 1, 2, 3}) {
            INFO(to_string(ah), ",", p);
            CHECK(std::abs(theta_coeff(ah, p, pt) - theta_coeff_cauchy(ah, p, pt)) < 1e-8);
        }
}

TEST_CASE("theta coefficients are the Hamiltonian densities") {
    LaxPoint pt = sample_point();
    for (auto& ah : flat_window(8))
        for (int p = 0; p <= 4; ++p) {
            INFO(to_string(ah), ",", p);
            CHECK(std::abs(theta_coeff(ah, p, pt) -
                           hamiltonian_density({ah, p - 1}, pt)) < 1e-12);
        }
}

TEST_CASE("theta(0) recovers the flat coordinates with lowered index") {
    LaxPoint pt = sample_point();
    // theta_alpha(0) = t^{-1-alpha}, theta_v(0) = u, theta_u(0) = v
    for (int a : {-3, -2, -1, 0, 1, 2})
        CHECK(std::abs(theta_coeff(ah_int(a), 0, pt) -
                       flat_coordinate(ah_int(-1 - a), pt)) < 1e-12);
    CHECK(std::abs(theta_coeff(ah_v(), 0, pt) - pt.u) < 1e-12);
    CHECK(std::abs(theta_coeff(ah_u(), 0, pt) - pt.v) < 1e-12);
}

TEST_CASE("F-family horizontality identities") {
    LaxPoint pt = sample_point();
    for (cd zeta : {cd(0.3), cd(0.2, 0.15)})
        for (auto& ah : kFamilies) {
            auto h = f_horizontality_residual(ah, pt, zeta);
            INFO(to_string(ah), " zeta=", zeta.real(), "+", zeta.imag(), "i");
            CHECK(h.r_first < 1e-10);
            CHECK(h.r_second < 1e-10);
            CHECK(h.r_rational < 1e-10);
            CHECK(h.r_u < 1e-10);
        }
}

TEST_CASE("dy differential against finite differences of y") {
    LaxPoint pt = sample_point();
    std::mt19937 rng(31);
    Triple X = random_triple(rng, pt.N());
    const cd zeta(0.3, 0.1);
    const double h = 1e-6;
    for (auto& ah : kFamilies) {
        cd fd = (y_function(ah, perturb(pt, X, h), zeta) -
                 y_function(ah, perturb(pt, X, -h), zeta)) /
                (2 * h);
        INFO(to_string(ah));
        CHECK(std::abs(fd - pairing(dy_differential(ah, pt, zeta), X)) < 1e-5);
    }
}

TEST_CASE("deformed flatness in manifold directions") {
    LaxPoint pt = sample_point();
    std::mt19937 rng(32);
    std::vector<Triple> dirs = {
        {Laurent(pt.N()), 1, 0},  // d/dv
        {Laurent(pt.N()), 0, 1},  // d/du
        {series(pt.N(), {{0, 1.0}}), 0, 0},
        random_triple(rng, pt.N()),
        random_triple(rng, pt.N()),
    };
    for (cd zeta : {cd(0.3), cd(0, 0.3), cd(-0.2, 0.2)})
        for (auto ah : {ah_int(-2), ah_int(-1), ah_int(0), ah_int(1), ah_int(2), ah_u(), ah_v()})
            for (auto& X : dirs) {
                INFO(to_string(ah));
                CHECK(deformed_flatness_residual(ah, zeta, X, pt) < 1e-5);
            }
}

TEST_CASE("zeta direction of the deformed connection") {
    LaxPoint pt = sample_point();
    for (cd zeta : {cd(0.3), cd(0, 0.3), cd(-0.2, 0.2)})
        for (auto& ah : kFamilies) {
            INFO(to_string(ah));
            CHECK(zeta_ode_residual(ah, zeta, pt) < 1e-5);
        }
}

TEST_CASE("Levelt factorization and analytic part") {
    LaxPoint pt = sample_point();
    const int A = 8;
    for (cd zeta : {cd(0.3), cd(0, 0.3)}) CHECK(levelt_residual(zeta, pt, A) < 1e-8);
    CHECK(theta_matrix_origin_residual(pt, A) < 1e-6);
    CHECK(theta_matrix_analyticity_residual(pt, A) < 1e-6);
}

TEST_CASE("monodromy of y_v and invariants of the monodromy data") {
    LaxPoint pt = sample_point();
    CHECK(y_monodromy_residual(pt, cd(0.3)) < 1e-9);
    CHECK(y_monodromy_residual(pt, cd(0.2, 0.1)) < 1e-9);
    CHECK(monodromy_invariants_residual(8) < 1e-12);
    MonodromyData md(2);
    auto W = flat_window(2);
    for (std::size_t i = 0; i < W.size(); ++i) {
        if (W[i].tag == AlphaHat::V) CHECK(md.mu[i] == 0.5);
        if (W[i].tag == AlphaHat::U) CHECK(md.mu[i] == -0.5);
        if (W[i].tag == AlphaHat::Int) CHECK(md.mu[i] == -W[i].alpha - 0.5);
    }
}

TEST_CASE("orthogonal families: Gram, change of basis, coefficient identities") {
    LaxPoint pt = sample_point();
    CHECK(orthogonality_residual(cd(0.3), pt, 6) < 1e-7);
    CHECK(orthogonality_residual(cd(0.2, 0.1), pt, 6) < 1e-7);
    for (auto& ah : kFamilies) {
        INFO(to_string(ah));
        CHECK(c_relation_residual(ah, pt, cd(0.25, 0.05), 8) < 1e-8);
    }
    for (auto& ah : kFamilies)
        for (int p : {0, 1, 2}) {
            INFO(to_string(ah), ",", p);
            CHECK(q_tilde_consistency(ah, p, pt) < 1e-8);
        }
    // theta~ = theta exactly for u and alpha <= -2
    for (cd zeta : {cd(0.3), cd(0.1, 0.2)}) {
        CHECK(std::abs(theta_tilde(ah_u(), pt, zeta) - theta(ah_u(), pt, zeta)) == 0.0);
        CHECK(std::abs(theta_tilde(ah_int(-2), pt, zeta) - theta(ah_int(-2), pt, zeta)) == 0.0);
    }
    // diagonal C entries
    CHECK(c_matrix_entry(ah_v(), ah_v()) == cd(1));
    CHECK(c_matrix_entry(ah_u(), ah_u()) == cd(1));
    CHECK(c_matrix_entry(ah_int(-2), ah_int(-2)) == cd(1));
    CHECK(c_matrix_entry(ah_int(0), ah_int(-1)) == cd(0));  // c_1 - 1 = 0
}

TEST_CASE("zeta disc boundary enforced") {
    LaxPoint pt = sample_point();
    CHECK_THROWS_AS(theta(ah_u(), pt, cd(0.8)), ZetaOutOfDisc);
    CHECK_THROWS_AS(dy_differential(ah_v(), pt, cd(0, 0.76)), ZetaOutOfDisc);
}

TEST_CASE("Omega tau-structure") {
    LoopLaxPoint lp = sample_loop();
    LaxPoint pt = lp.slices[0];
    // single-term sum when q = 0
    HierarchyIndex a{ah_int(0), 1}, b{ah_v(), 0};
    cd direct = eta_cotangent(dtheta_coeff(a.ah, a.p + 1, pt), dtheta_coeff(b.ah, 0, pt), pt);
    CHECK(std::abs(omega(a, b, pt) - direct) < 1e-13);
    // x-derivative of Omega equals the flow derivative of the density
    CHECK(omega_xderiv_residual({ah_u(), 0}, {ah_int(0), 0}, lp) < 1e-7);
    CHECK(omega_xderiv_residual({ah_int(0), 1}, {ah_v(), 1}, lp) < 1e-7);
    CHECK(omega_xderiv_residual({ah_int(-1), 0}, {ah_u(), 1}, lp) < 1e-7);
    // symmetry of the tau-structure: Omega_{a;b} - Omega_{b;a} is x-constant,
    // so the two give the same tau function
    const int M = lp.M();
    for (auto [a2, b2] : {std::pair{HierarchyIndex{ah_int(1), 0}, HierarchyIndex{ah_v(), 1}},
                          std::pair{HierarchyIndex{ah_u(), 1}, HierarchyIndex{ah_int(-1), 0}}}) {
        std::vector<cd> diff;
        for (int j = 0; j < M; j += 8)
            diff.push_back(omega(a2, b2, lp.slices[j]) - omega(b2, a2, lp.slices[j]));
        cd mean = 0;
        for (auto& d : diff) mean += d / double(diff.size());
        double worst = 0;
        for (auto& d : diff) worst = std::max(worst, std::abs(d - mean));
        CHECK(worst < 1e-7);
    }
}
