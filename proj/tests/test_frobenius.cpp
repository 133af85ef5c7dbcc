#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "points.hpp"

using namespace toda;
using namespace toda::testing;

TEST_CASE("flat coordinates at the sample point") {
    LaxPoint pt = sample_point();
    // w = z + 0.1 + 0.25/z: t^1 = (w^-1)_0, t^u = log 0.25, t^v = 0
    CHECK(std::abs(flat_coordinate(ah_u(), pt) - std::log(cd(0.25))) < 1e-14);
    CHECK(std::abs(flat_coordinate(ah_v(), pt)) < 1e-14);
    // t^0 = -(log(w/z))_0; for w/z = 1 + 0.1/z + 0.25/z^2 the mean of the log
    // over the circle is log of the constant term of the analytic branch = 0
    CHECK(std::abs(flat_coordinate(ah_int(0), pt)) < 1e-13);
    // t^{-1} = -(w)_0 = -0.1
    CHECK(std::abs(flat_coordinate(ah_int(-1), pt) + 0.1) < 1e-13);
}

TEST_CASE("dt differentials pair diagonally with coordinate fields") {
    LaxPoint pt = sample_point();
    auto W = flat_window(4);
    for (std::size_t i = 0; i < W.size(); ++i)
        for (std::size_t j = 0; j < W.size(); ++j) {
            cd p = pairing(dt_differential(W[i], pt), coordinate_vector(W[j], pt));
            CHECK(std::abs(p - (i == j ? 1.0 : 0.0)) < 1e-11);
        }
}

TEST_CASE("flat differentials are exact: FD of t along coordinate fields") {
    LaxPoint pt = sample_point();
    std::mt19937 rng(21);
    Triple X = random_triple(rng, pt.N());
    const double h = 1e-6;
    for (auto ah : {ah_int(1), ah_int(0), ah_int(-2), ah_v(), ah_u()}) {
        cd fd = (flat_coordinate(ah, perturb(pt, X, h)) -
                 flat_coordinate(ah, perturb(pt, X, -h))) /
                (2 * h);
        CHECK(std::abs(fd - pairing(dt_differential(ah, pt), X)) < 1e-7);
    }
}

TEST_CASE("eta Gram matrix matches the delta pattern") {
    LaxPoint pt = sample_point();
    const int A = 8;
    auto W = flat_window(A);
    auto E = eta_gram(A);
    std::vector<Triple> dts;
    for (auto& ah : W) dts.push_back(dt_differential(ah, pt));
    double worst = 0;
    for (std::size_t i = 0; i < W.size(); ++i)
        for (std::size_t j = 0; j < W.size(); ++j)
            worst = std::max(worst, std::abs(eta_cotangent(dts[i], dts[j], pt) - E[i][j]));
    CHECK(worst < 1e-10);
}

TEST_CASE("Euler field grades the flat coordinates") {
    LaxPoint pt = sample_point();
    Triple E = euler_field(pt);
    // E(t^alpha) = (1 - alpha... ) check via pairing with dt and FD agreement
    const double h = 1e-6;
    for (auto ah : {ah_int(2), ah_int(-1), ah_v()}) {
        cd fd = (flat_coordinate(ah, perturb(pt, E, h)) -
                 flat_coordinate(ah, perturb(pt, E, -h))) /
                (2 * h);
        CHECK(std::abs(fd - pairing(dt_differential(ah, pt), E)) < 1e-7);
    }
}

TEST_CASE("Riemann-Hilbert factorization of the image curve") {
    LaxPoint pt = sample_point();
    RHFactorization rh = rh_factorize(pt, 16);
    CHECK(rh.residual < 1e-8);
    CHECK(rh.series_residual_exterior < 1e-8);
    CHECK(rh.series_residual_interior < 1e-8);
    CHECK(std::abs(rh.finf_leading - 1.0) < 1e-8);
    CHECK(rh.f0_nonvanishing);
    CHECK(rh.finf_nonvanishing);
    // the exterior-part coefficients are the flat coordinates: spot-check
    CHECK(std::abs(rh.t.at(-1) - flat_coordinate(ah_int(-1), pt)) == 0.0);
}

TEST_CASE("RH factorization requires the big cell") {
    const int N = 32;
    LaxPoint off(series(N, {{1, 1.0}, {0, 0.1}}), Laurent(N));
    CHECK_THROWS_AS(rh_factorize(off, 8), Error);
}
