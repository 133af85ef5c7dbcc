#pragma once

#include <map>

#include "hierarchy.hpp"
#include "lax.hpp"

namespace toda {

//------------------------------------------------------------------------
// Flat coordinates, their differentials, the eta Gram matrix, and the
// Riemann-Hilbert factorization of the curve Gamma = w(S^1).
//------------------------------------------------------------------------

// Values of w^n on the circle through the winding-normalized logarithm,
// exp(n log(w/z)) z^n; for integer n this agrees with pointwise powers.
inline Grid w_power_values(const LaxPoint& pt, int n) {
    require_m1(pt);
    Grid g = grid(pt.log_w_over_z);
    Grid z = unit_circle(int(g.size()));
    Grid out(g.size());
    for (std::size_t i = 0; i < g.size(); ++i)
        out[i] = std::exp(double(n) * g[i]) * std::pow(z[i], double(n));
    return out;
}

inline cd flat_coordinate(const AlphaHat& ah, const LaxPoint& pt) {
    if (ah.tag == AlphaHat::U) return pt.u;
    if (ah.tag == AlphaHat::V) return pt.v;
    require_m0(pt);
    if (ah.alpha == 0) return -c0(pt.log_w_over_z);
    return c0(coeffs(w_power_values(pt, -ah.alpha), pt.N())) / double(ah.alpha);
}

// dt^alpha = (-w^{-alpha-1}, 0, 0); dv = (0,1,0); du = (0,0,1).
inline Triple dt_differential(const AlphaHat& ah, const LaxPoint& pt) {
    if (ah.tag == AlphaHat::U) return {Laurent(pt.N()), 0.0, 1.0};
    if (ah.tag == AlphaHat::V) return {Laurent(pt.N()), 1.0, 0.0};
    return {-1.0 * coeffs(w_power_values(pt, -ah.alpha - 1), pt.N()), 0.0, 0.0};
}

// d/dt^alpha = (-z w' w^alpha, 0, 0); d/dv = (0,1,0); d/du = (0,0,1).
inline Triple coordinate_vector(const AlphaHat& ah, const LaxPoint& pt) {
    if (ah.tag == AlphaHat::U) return {Laurent(pt.N()), 0.0, 1.0};
    if (ah.tag == AlphaHat::V) return {Laurent(pt.N()), 1.0, 0.0};
    Grid vals = w_power_values(pt, ah.alpha);
    for (std::size_t i = 0; i < vals.size(); ++i) vals[i] *= -pt.zwpv[i];
    return {coeffs(vals, pt.N()), 0.0, 0.0};
}

// Flat window {-A..A, v, u}.
inline std::vector<AlphaHat> flat_window(int A) {
    std::vector<AlphaHat> w;
    for (int a = -A; a <= A; ++a) w.push_back(ah_int(a));
    w.push_back(ah_v());
    w.push_back(ah_u());
    return w;
}

// Expected Gram matrix of eta on the window: delta_{a+b,-1} and the u-v cross.
inline std::vector<std::vector<double>> eta_gram(int A) {
    auto W = flat_window(A);
    std::vector<std::vector<double>> E(W.size(), std::vector<double>(W.size(), 0.0));
    for (std::size_t i = 0; i < W.size(); ++i)
        for (std::size_t j = 0; j < W.size(); ++j) {
            const AlphaHat &a = W[i], &b = W[j];
            if ((a.tag == AlphaHat::U && b.tag == AlphaHat::V) ||
                (a.tag == AlphaHat::V && b.tag == AlphaHat::U))
                E[i][j] = 1.0;
            else if (a.tag == AlphaHat::Int && b.tag == AlphaHat::Int &&
                     a.alpha + b.alpha == -1)
                E[i][j] = 1.0;
        }
    return E;
}

// Per-point cache of flat-frame data on a window.
struct FlatFrame {
    int A;
    std::vector<AlphaHat> indices;
    std::vector<Triple> dt;        // differentials
    std::vector<Triple> coord;     // coordinate vector fields
    std::vector<cd> t;             // coordinate values

    FlatFrame(const LaxPoint& pt, int window) : A(window), indices(flat_window(window)) {
        for (auto& ah : indices) {
            dt.push_back(dt_differential(ah, pt));
            coord.push_back(coordinate_vector(ah, pt));
            t.push_back(flat_coordinate(ah, pt));
        }
    }
};

//------------------------------------------------------------------------
// Riemann-Hilbert factorization: z(w) f0(w) = f_inf(w) on Gamma with f0
// analytic inside, f_inf/w analytic outside and -> 1 at infinity.
//------------------------------------------------------------------------

struct RHFactorization {
    int window = 0;
    std::map<int, cd> t;           // flat coordinates t^alpha, |alpha| <= window
    double residual = 0;           // max_Gamma |z(w) f0 - f_inf| (exact splitting)
    double series_residual_exterior = 0;  // window-A series vs splitting, |w| large
    double series_residual_interior = 0;  // same inside Gamma
    cd finf_leading{};             // coefficient of w in f_inf, expected 1
    bool f0_nonvanishing = false, finf_nonvanishing = false;
};

inline RHFactorization rh_factorize(const LaxPoint& pt, int A = 16) {
    require_m0(pt);
    const int P = int(pt.wv.size());
    const Grid& wv = pt.wv;

    // G = log(z/w) on the circle; dw = i z w' dtheta
    Grid G = -1.0 * grid(pt.log_w_over_z);
    Grid dw(P), Gth = grid(z_deriv(coeffs(G, pt.N())));
    for (int j = 0; j < P; ++j) {
        dw[j] = cd(0, 1) * pt.zwpv[j];
        Gth[j] *= cd(0, 1);
    }

    // Boundary values of the exterior part by regularized Cauchy quadrature.
    Grid hinf(P);
    for (int j = 0; j < P; ++j) {
        cd acc = 0;
        for (int l = 0; l < P; ++l) {
            cd den = wv[l] - wv[j];
            cd rat = (std::abs(den) > 1e-13) ? (G[l] - G[j]) / den : Gth[j] / dw[j];
            acc += rat * dw[l];
        }
        hinf[j] = -acc / (cd(0, 1) * double(P));
    }

    RHFactorization out;
    out.window = A;
    for (int a = -A; a <= A; ++a) out.t[a] = flat_coordinate(ah_int(a), pt);

    Grid zc = unit_circle(P);
    double resid = 0, scale = 0, f0min = 1e300, fimin = 1e300;
    for (int j = 0; j < P; ++j) {
        cd f0 = std::exp(hinf[j] - G[j]);
        cd fi = wv[j] * std::exp(hinf[j]);
        resid = std::max(resid, std::abs(zc[j] * f0 - fi));
        scale = std::max(scale, std::abs(fi));
        f0min = std::min(f0min, std::abs(f0));
        fimin = std::min(fimin, std::abs(fi / wv[j]));
    }
    out.residual = resid;
    out.f0_nonvanishing = f0min > 1e-12;
    out.finf_nonvanishing = fimin > 1e-12;

    // Compare the coefficient windows against the splitting where the series
    // converge: a circle outside Gamma and one inside.
    double wmax = 0, wmin = 1e300;
    for (auto& x : wv) {
        wmax = std::max(wmax, std::abs(x));
        wmin = std::min(wmin, std::abs(x));
    }
    auto cauchy = [&](cd w0) {
        cd acc = 0;
        for (int l = 0; l < P; ++l) acc += G[l] / (wv[l] - w0) * dw[l];
        return acc / (cd(0, 1) * double(P));
    };
    const int nodes = 32;
    double ext = 0, inte = 0;
    cd lead_acc = 0;
    for (int i = 0; i < nodes; ++i) {
        cd dir = std::exp(cd(0, 2 * std::numbers::pi * i / nodes));
        cd w0 = 2.0 * wmax * dir;
        cd h = -cauchy(w0);  // exterior part
        lead_acc += h;
        cd ser = 0;
        for (int a = -A; a < 0; ++a) ser += out.t[a] * std::pow(w0, double(a));
        ext = std::max(ext, std::abs(h - ser));
        cd w1 = 0.3 * wmin * dir;
        cd h0 = cauchy(w1);  // interior part
        cd ser0 = 0;
        for (int a = 0; a <= A; ++a) ser0 -= out.t[a] * std::pow(w1, double(a));
        inte = std::max(inte, std::abs(h0 - ser0));
    }
    out.series_residual_exterior = ext;
    out.series_residual_interior = inte;
    out.finf_leading = std::exp(lead_acc / double(nodes));

    if (out.residual > 1e-6 * scale) throw FactorizationResidualTooLarge();
    return out;
}

}  // namespace toda
