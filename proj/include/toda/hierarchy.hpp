#pragma once

#include <functional>
#include <string>
#include <utility>

#include "lax.hpp"

namespace toda {

//------------------------------------------------------------------------
// Loop fields on S^1 x S^1 and the extended hierarchy: Q-functions, Lax
// flows, Poisson operators, recursion, tau symmetry, time integration.
//------------------------------------------------------------------------

struct LoopField {
    int N = 0, M = 0;
    std::vector<cd> c;  // z-coefficients sampled on the x-grid: c[(k+N)*M + j]

    LoopField() = default;
    LoopField(int n, int m) : N(n), M(m), c(std::size_t(2 * n + 1) * m) {}

    cd& at(int k, int j) { return c[std::size_t(k + N) * M + j]; }
    const cd& at(int k, int j) const { return c[std::size_t(k + N) * M + j]; }

    Laurent slice(int j) const {
        Laurent f(N);
        for (int k = -N; k <= N; ++k) f.at(k) = at(k, j);
        return f;
    }
    void set_slice(int j, const Laurent& f) {
        for (int k = -N; k <= N; ++k) at(k, j) = f.at(k);
    }
};

inline LoopField operator+(LoopField a, const LoopField& b) {
    for (std::size_t i = 0; i < a.c.size(); ++i) a.c[i] += b.c[i];
    return a;
}
inline LoopField operator-(LoopField a, const LoopField& b) {
    for (std::size_t i = 0; i < a.c.size(); ++i) a.c[i] -= b.c[i];
    return a;
}
inline LoopField operator*(cd s, LoopField a) {
    for (auto& x : a.c) x *= s;
    return a;
}
inline LoopField operator*(double s, LoopField a) { return cd(s) * std::move(a); }
inline LoopField operator-(LoopField a) { return cd(-1) * std::move(a); }

inline LoopField loop_const(const Laurent& f, int M) {
    LoopField F(f.N, M);
    for (int k = -f.N; k <= f.N; ++k)
        for (int j = 0; j < M; ++j) F.at(k, j) = f.at(k);
    return F;
}

// Spectral d/dx (x-period 2 pi).
inline LoopField x_deriv(const LoopField& F) {
    LoopField out(F.N, F.M);
    std::vector<cd> row(F.M);
    for (int k = -F.N; k <= F.N; ++k) {
        for (int j = 0; j < F.M; ++j) row[j] = F.at(k, j);
        fft_inplace(row, false);
        for (int j = 0; j < F.M; ++j) {
            int m = j <= F.M / 2 ? j : j - F.M;
            if (j == F.M / 2) m = -F.M / 2;  // Nyquist mode, consistent sign
            row[j] *= cd(0, m);
        }
        fft_inplace(row, true);
        for (int j = 0; j < F.M; ++j) out.at(k, j) = row[j];
    }
    return out;
}

inline LoopField loop_mul(const LoopField& F, const LoopField& G) {
    LoopField out(F.N, F.M);
    for (int j = 0; j < F.M; ++j) out.set_slice(j, mul(F.slice(j), G.slice(j)));
    return out;
}

inline LoopField loop_project(const LoopField& F, int lo, int hi) {
    LoopField out(F.N, F.M);
    for (int k = -F.N; k <= F.N; ++k)
        if (k >= lo && k <= hi)
            for (int j = 0; j < F.M; ++j) out.at(k, j) = F.at(k, j);
    return out;
}

inline LoopField loop_zderiv(const LoopField& F) {
    LoopField out(F.N, F.M);
    for (int k = -F.N; k <= F.N; ++k)
        for (int j = 0; j < F.M; ++j) out.at(k, j) = double(k) * F.at(k, j);
    return out;
}

// {f, g} = z f_z g_x - z g_z f_x
inline LoopField poisson_bracket(const LoopField& F, const LoopField& G) {
    return loop_mul(loop_zderiv(F), x_deriv(G)) - loop_mul(loop_zderiv(G), x_deriv(F));
}

inline std::vector<cd> loop_c0(const LoopField& F) {  // z^0 coefficient per x
    std::vector<cd> out(F.M);
    for (int j = 0; j < F.M; ++j) out[j] = F.at(0, j);
    return out;
}

inline double norm_inf(const LoopField& F) {
    double m = 0;
    for (auto& x : F.c) m = std::max(m, std::abs(x));
    return m;
}

inline double tail_health(const LoopField& F) {
    double tail = 0, all = 0;
    for (int k = -F.N; k <= F.N; ++k)
        for (int j = 0; j < F.M; ++j) {
            double a = std::abs(F.at(k, j));
            all = std::max(all, a);
            if (std::abs(k) >= F.N - 2) tail = std::max(tail, a);
        }
    return all > 0 ? tail / all : 0.0;
}

// ---- hierarchy indices ------------------------------------------------------

struct AlphaHat {
    enum Tag { Int, U, V } tag = Int;
    int alpha = 0;

    bool operator==(const AlphaHat&) const = default;
};

inline AlphaHat ah_int(int a) { return {AlphaHat::Int, a}; }
inline AlphaHat ah_u() { return {AlphaHat::U, 0}; }
inline AlphaHat ah_v() { return {AlphaHat::V, 0}; }

inline std::string to_string(const AlphaHat& a) {
    if (a.tag == AlphaHat::U) return "u";
    if (a.tag == AlphaHat::V) return "v";
    return std::to_string(a.alpha);
}

struct HierarchyIndex {
    AlphaHat ah;
    int p = 0;

    bool operator==(const HierarchyIndex&) const = default;
};

inline std::string to_string(const HierarchyIndex& i) {
    return to_string(i.ah) + "," + std::to_string(i.p);
}

// ---- Q-functions (values on the z-grid at a point) --------------------------

inline Grid q_values(const LaxPoint& pt, const AlphaHat& ah, int p) {
    if (p < -1) throw OutOfDomain("q_values: p < -1");
    const Grid &lam = pt.lamv, &lab = pt.labv, &wvl = pt.wv;
    const std::size_t P = lam.size();
    if (p == -1) {
        Grid out(P);
        if (ah.tag == AlphaHat::U)
            std::fill(out.begin(), out.end(), cd(1));
        else if (ah.tag == AlphaHat::V)
            for (std::size_t i = 0; i < P; ++i) out[i] = 1.0 / lab[i] - 1.0 / lam[i];
        else if (ah.alpha == -1)
            for (std::size_t i = 0; i < P; ++i) out[i] = -1.0 / lam[i];
        return out;
    }
    const double df = double_factorial(2 * p);  // (2p)!!
    if (ah.tag == AlphaHat::Int && ah.alpha != -1) {
        const int a = ah.alpha + 1;
        Grid out(P);
        for (std::size_t i = 0; i < P; ++i)
            out[i] = -std::pow(wvl[i], a) * std::pow(lab[i] - lam[i], p) / (double(a) * df);
        return out;
    }
    if (ah.tag == AlphaHat::U) {
        Grid out(P);
        for (std::size_t i = 0; i < P; ++i) out[i] = std::pow(lab[i], p + 1) / factorial(p + 1);
        return out;
    }
    require_m1(pt);
    const double cp = harmonic(p), fp = factorial(p);
    Grid out(P);
    if (ah.tag == AlphaHat::Int) {  // alpha == -1
        for (std::size_t i = 0; i < P; ++i)
            out[i] = -std::pow(-lam[i], p) / fp * (pt.Lv[i] + cp - 1.0) -
                     std::pow(lab[i] - lam[i], p) / df;
        return out;
    }
    for (std::size_t i = 0; i < P; ++i)  // v
        out[i] = -std::pow(-lam[i], p) / fp * (pt.Lv[i] + cp - 1.0) +
                 std::pow(lab[i], p) / fp * (pt.Kv[i] - cp - 1.0);
    return out;
}

// Closed-form partial derivatives (dQ/dlambda, dQ/dlambdabar) for p >= 0.
inline std::pair<Grid, Grid> q_partials(const LaxPoint& pt, const AlphaHat& ah, int p) {
    const Grid &lam = pt.lamv, &lab = pt.labv, &wvl = pt.wv;
    const std::size_t P = lam.size();
    const double df = double_factorial(2 * p);
    Grid ql(P), qb(P);
    if (ah.tag == AlphaHat::Int && ah.alpha != -1) {
        const int a = ah.alpha + 1;
        for (std::size_t i = 0; i < P; ++i) {
            cd s = lab[i] - lam[i];
            cd base = -std::pow(wvl[i], a - 1) * std::pow(s, p) / df;
            cd extra = p > 0 ? double(p) * std::pow(wvl[i], a) * std::pow(s, p - 1) /
                                   (double(a) * df)
                             : cd(0);
            ql[i] = base + extra;
            qb[i] = base - extra;
        }
        return {ql, qb};
    }
    if (ah.tag == AlphaHat::U) {
        for (std::size_t i = 0; i < P; ++i) qb[i] = std::pow(lab[i], p) / factorial(p);
        return {ql, qb};
    }
    require_m1(pt);
    const double cp = harmonic(p), fp = factorial(p);
    if (ah.tag == AlphaHat::Int) {  // alpha == -1
        for (std::size_t i = 0; i < P; ++i) {
            cd Ppw = std::pow(-lam[i], p) / fp;
            cd dP = p > 0 ? -std::pow(-lam[i], p - 1) / factorial(p - 1) : cd(0);
            cd sp = p > 0 ? double(p) * std::pow(lab[i] - lam[i], p - 1) / df : cd(0);
            ql[i] = -dP * (pt.Lv[i] + cp - 1.0) - Ppw * (1.0 / wvl[i] - 1.0 / lam[i]) + sp;
            qb[i] = -Ppw / wvl[i] - sp;
        }
        return {ql, qb};
    }
    for (std::size_t i = 0; i < P; ++i) {  // v
        cd Ppw = std::pow(-lam[i], p) / fp;
        cd dP = p > 0 ? -std::pow(-lam[i], p - 1) / factorial(p - 1) : cd(0);
        cd B = std::pow(lab[i], p) / fp;
        cd dB = p > 0 ? std::pow(lab[i], p - 1) / factorial(p - 1) : cd(0);
        ql[i] = -dP * (pt.Lv[i] + cp - 1.0) - Ppw * (1.0 / wvl[i] - 1.0 / lam[i]) + B / wvl[i];
        qb[i] = -Ppw / wvl[i] + dB * (pt.Kv[i] - cp - 1.0) + B * (1.0 / lab[i] + 1.0 / wvl[i]);
    }
    return {ql, qb};
}

inline Laurent q_function(const HierarchyIndex& idx, const LaxPoint& pt) {
    return coeffs(q_values(pt, idx.ah, idx.p), pt.N());
}

// Densities of the orthogonal variant of the hierarchy.
inline Grid q_tilde_values(const LaxPoint& pt, const AlphaHat& ah, int p) {
    if (p < 0) throw OutOfDomain("q_tilde_values: p < 0");
    if (ah.tag == AlphaHat::U || (ah.tag == AlphaHat::Int && ah.alpha <= -2))
        return q_values(pt, ah, p);
    const Grid &lam = pt.lamv, &lab = pt.labv, &wvl = pt.wv;
    const std::size_t P = lam.size();
    Grid out(P);
    if (ah.tag == AlphaHat::Int && ah.alpha >= 0) {
        const int a = ah.alpha;
        const double c = -2.0 * double_factorial(2 * a);
        for (std::size_t i = 0; i < P; ++i) {
            cd sh = (lab[i] - lam[i]) / 2.0, wh = wvl[i] / 2.0, acc = 0;
            for (int n = 0; 2 * n <= p; ++n)
                acc += std::pow(sh, p - 2 * n) * std::pow(wh, 2 * n + a + 1) /
                       (factorial(2 * n + a + 1) * factorial(p - 2 * n));
            out[i] = c * acc;
        }
        return out;
    }
    require_m1(pt);
    const double cp = harmonic(p), fp = factorial(p);
    if (ah.tag == AlphaHat::Int) {  // alpha == -1
        for (std::size_t i = 0; i < P; ++i) {
            cd s = lab[i] - lam[i], acc = 0;
            for (int l = 0; l <= p - 1; ++l)
                acc += std::pow(s, l) * std::pow(-wvl[i], p - l) * harmonic(p - l) /
                       (factorial(l) * factorial(p - l));
            out[i] = -std::pow(-lam[i], p) / fp * (pt.Lv[i] + cp) + std::pow(2.0, -p) * acc;
        }
        return out;
    }
    for (std::size_t i = 0; i < P; ++i) {  // v
        cd acc = 0;
        for (int l = 0; l <= p - 1; ++l) {
            double den = double_factorial(2 * (p - l)) * (p - l);
            acc += -std::pow(-lam[i], l) / factorial(l) * std::pow(wvl[i], p - l) / den +
                   std::pow(lab[i], l) / factorial(l) * std::pow(-wvl[i], p - l) / den;
        }
        out[i] = -std::pow(-lam[i], p) / fp * (pt.Lv[i] + cp) +
                 std::pow(lab[i], p) / fp * (pt.Kv[i] - cp) + acc;
    }
    return out;
}

inline Laurent q_tilde_function(const HierarchyIndex& idx, const LaxPoint& pt) {
    return coeffs(q_tilde_values(pt, idx.ah, idx.p), pt.N());
}

// ---- loop points -------------------------------------------------------------

struct LoopLaxPoint {
    LoopField lam, lab;
    std::vector<LaxPoint> slices;
    bool in_m1 = false;

    LoopLaxPoint(LoopField L, LoopField B) : lam(std::move(L)), lab(std::move(B)) {
        in_m1 = true;
        slices.reserve(lam.M);
        for (int j = 0; j < lam.M; ++j) {
            slices.emplace_back(lam.slice(j), lab.slice(j));
            in_m1 = in_m1 && slices.back().in_m1;
        }
    }

    int N() const { return lam.N; }
    int M() const { return lam.M; }

    LoopField q_field(const AlphaHat& ah, int p) const {
        LoopField out(N(), M());
        for (int j = 0; j < M(); ++j)
            out.set_slice(j, coeffs(q_values(slices[j], ah, p), N()));
        return out;
    }

    std::pair<LoopField, LoopField> q_partial_fields(const AlphaHat& ah, int p) const {
        LoopField ql(N(), M()), qb(N(), M());
        for (int j = 0; j < M(); ++j) {
            auto [l, b] = q_partials(slices[j], ah, p);
            ql.set_slice(j, coeffs(l, N()));
            qb.set_slice(j, coeffs(b, N()));
        }
        return {ql, qb};
    }
};

inline void require_m1(const LoopLaxPoint& lp) {
    if (!lp.in_m1) throw NotInM1();
}

struct FlowVector {
    LoopField d_lam, d_lab;
};

inline FlowVector operator-(FlowVector a, const FlowVector& b) {
    return {a.d_lam - b.d_lam, a.d_lab - b.d_lab};
}
inline FlowVector operator+(FlowVector a, const FlowVector& b) {
    return {a.d_lam + b.d_lam, a.d_lab + b.d_lab};
}
inline FlowVector operator*(double s, FlowVector a) {
    return {s * a.d_lam, s * a.d_lab};
}
inline double norm_inf(const FlowVector& f) {
    return std::max(norm_inf(f.d_lam), norm_inf(f.d_lab));
}

// Lax flow: (d lambda, d lambdabar) = ({-Q_-, lambda}, {Q_+, lambdabar}).
inline FlowVector lax_flow(const HierarchyIndex& idx, const LoopLaxPoint& lp) {
    if (idx.p < 0) throw OutOfDomain("lax_flow: p < 0");
    LoopField Q = lp.q_field(idx.ah, idx.p);
    const int N = lp.N();
    return {poisson_bracket(-loop_project(Q, -N, -1), lp.lam),
            poisson_bracket(loop_project(Q, 0, N), lp.lab)};
}

inline FlowVector classical_lax_flow(int n, bool bar, const LoopLaxPoint& lp) {
    if (n < 1) throw OutOfDomain("classical_lax_flow: n < 1");
    const int N = lp.N();
    LoopField pw(N, lp.M());
    for (int j = 0; j < lp.M(); ++j) {
        const LaxPoint& s = lp.slices[j];
        Grid vals(s.lamv.size());
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] = std::pow(bar ? s.labv[i] : s.lamv[i], n);
        pw.set_slice(j, coeffs(vals, N));
    }
    LoopField gen = bar ? loop_project(pw, -N, -1) : loop_project(pw, 0, N);
    return {poisson_bracket(gen, lp.lam), poisson_bracket(gen, lp.lab)};
}

// Full-form Hamiltonian gradient covector of H_{ah,p}: partials of Q_{ah,p+1}.
inline std::pair<LoopField, LoopField> hamiltonian_gradient(const HierarchyIndex& idx,
                                                            const LoopLaxPoint& lp) {
    return lp.q_partial_fields(idx.ah, idx.p + 1);
}

// ---- Poisson operators ---------------------------------------------------------

inline FlowVector poisson_p1(const LoopField& o, const LoopField& ob, const LoopLaxPoint& lp) {
    const int N = lp.N();
    LoopField Bf = poisson_bracket(lp.lam, o) + poisson_bracket(lp.lab, ob);
    LoopField first =
        -poisson_bracket(lp.lam, loop_project(o - ob, -N, -1)) + loop_project(Bf, -N, 0);
    LoopField second =
        poisson_bracket(lp.lab, loop_project(o - ob, 0, N)) + loop_project(Bf, 1, N);
    return {first, second};
}

inline FlowVector poisson_p2(const LoopField& o, const LoopField& ob, const LoopLaxPoint& lp) {
    const int N = lp.N();
    LoopField Bf = poisson_bracket(lp.lam, o) + poisson_bracket(lp.lab, ob);
    LoopField Cc = loop_mul(lp.lam, o) + loop_mul(lp.lab, ob);
    std::vector<cd> phix = loop_c0(Bf);
    LoopField zlp = loop_zderiv(lp.lam), zbp = loop_zderiv(lp.lab);
    LoopField first = poisson_bracket(lp.lam, loop_project(Cc, -N, -1)) -
                      loop_mul(lp.lam, loop_project(Bf, -N, 0));
    LoopField second = -poisson_bracket(lp.lab, loop_project(Cc, 0, N)) +
                       loop_mul(lp.lab, loop_project(Bf, 1, N));
    for (int k = -N; k <= N; ++k)
        for (int j = 0; j < lp.M(); ++j) {
            first.at(k, j) += zlp.at(k, j) * phix[j];
            second.at(k, j) += zbp.at(k, j) * phix[j];
        }
    return {first, second};
}

inline cd loop_pairing(const LoopField& oa, const LoopField& oab, const FlowVector& X) {
    cd acc = 0;
    std::vector<cd> a = loop_c0(loop_mul(oa, X.d_lam)), b = loop_c0(loop_mul(oab, X.d_lab));
    for (std::size_t j = 0; j < a.size(); ++j) acc += a[j] + b[j];
    return acc / double(a.size());
}

// ---- residual diagnostics --------------------------------------------------------

// dQ_{ah,p}/dt along a given flow, by the chain rule with closed-form partials.
inline LoopField q_time_derivative(const LoopLaxPoint& lp, const AlphaHat& ah, int p,
                                   const FlowVector& flow) {
    auto [ql, qb] = lp.q_partial_fields(ah, p);
    return loop_mul(ql, flow.d_lam) + loop_mul(qb, flow.d_lab);
}

inline LoopField zs_residual(const HierarchyIndex& a, const HierarchyIndex& b,
                             const LoopLaxPoint& lp) {
    require_m1(lp);
    const int N = lp.N();
    LoopField Qa = lp.q_field(a.ah, a.p), Qb = lp.q_field(b.ah, b.p);
    FlowVector fa = lax_flow(a, lp), fb = lax_flow(b, lp);
    LoopField dQa = q_time_derivative(lp, a.ah, a.p, fb);
    LoopField dQb = q_time_derivative(lp, b.ah, b.p, fa);
    return dQa - dQb + poisson_bracket(loop_project(Qa, 0, N), loop_project(Qb, 0, N)) -
           poisson_bracket(loop_project(Qa, -N, -1), loop_project(Qb, -N, -1));
}

// Left minus right of the applicable bi-Hamiltonian recursion relation.
inline FlowVector recursion_residual(const HierarchyIndex& idx, const LoopLaxPoint& lp) {
    auto [o, ob] = hamiltonian_gradient(idx, lp);
    FlowVector lhs = poisson_p2(o, ob, lp);
    FlowVector rhs{LoopField(lp.N(), lp.M()), LoopField(lp.N(), lp.M())};
    if (idx.ah.tag == AlphaHat::Int) {
        auto [p1, p1b] = hamiltonian_gradient({idx.ah, idx.p + 1}, lp);
        rhs = double(idx.ah.alpha + idx.p + 2) * poisson_p1(p1, p1b, lp);
    } else if (idx.ah.tag == AlphaHat::V) {
        auto [v1, v1b] = hamiltonian_gradient({ah_v(), idx.p + 1}, lp);
        auto [u0, u0b] = hamiltonian_gradient({ah_u(), idx.p}, lp);
        rhs = double(idx.p + 1) * poisson_p1(v1, v1b, lp) + 2.0 * poisson_p1(u0, u0b, lp);
    } else {
        auto [u1, u1b] = hamiltonian_gradient({ah_u(), idx.p + 1}, lp);
        rhs = double(idx.p + 2) * poisson_p1(u1, u1b, lp);
    }
    return lhs - rhs;
}

// ---- Hamiltonians ------------------------------------------------------------------

inline cd hamiltonian_density(const HierarchyIndex& idx, const LaxPoint& pt) {
    return c0(coeffs(q_values(pt, idx.ah, idx.p + 1), pt.N()));
}

inline cd hamiltonian(const HierarchyIndex& idx, const LoopLaxPoint& lp) {
    cd acc = 0;
    for (auto& s : lp.slices) acc += hamiltonian_density(idx, s);
    return acc / double(lp.M());
}

// Cross-derivative of densities: d/dt^b h_{a,p-1} - d/dt^a h_{b,q-1} over x.
inline std::vector<cd> tau_symmetry_residual(const HierarchyIndex& a, const HierarchyIndex& b,
                                             const LoopLaxPoint& lp) {
    FlowVector fa = lax_flow(a, lp), fb = lax_flow(b, lp);
    std::vector<cd> da = loop_c0(q_time_derivative(lp, a.ah, a.p, fb));
    std::vector<cd> db = loop_c0(q_time_derivative(lp, b.ah, b.p, fa));
    for (std::size_t j = 0; j < da.size(); ++j) da[j] -= db[j];
    return da;
}

inline cd classical_hamiltonian(int n, bool bar, const LoopLaxPoint& lp) {
    cd acc = 0;
    for (auto& s : lp.slices) {
        const Grid& base = bar ? s.labv : s.lamv;
        Grid vals(base.size());
        for (std::size_t i = 0; i < vals.size(); ++i)
            vals[i] = -std::pow(base[i], n + 1) / double(n + 1);
        acc += c0(coeffs(vals, lp.N()));
    }
    return acc / double(lp.M());
}

// H_n as a finite combination of extended Hamiltonians.
inline cd classical_combination(int n, const LoopLaxPoint& lp) {
    cd s = std::pow(-1.0, n) * factorial(n) * hamiltonian({ah_u(), n - 1}, lp);
    for (int l = 0; l <= n; ++l) {
        double coef = factorial(n) * (std::pow(-1.0, l) - std::pow(-1.0, n + 1)) /
                      (factorial(n - l) * std::pow(2.0, n - l + 1));
        if (coef != 0.0) s += coef * hamiltonian({ah_int(n - l), l - 1}, lp);
    }
    return s;
}

inline cd classical_combination_residual(int n, const LoopLaxPoint& lp) {
    return classical_hamiltonian(n, false, lp) - classical_combination(n, lp);
}

// ---- homogeneity identities -----------------------------------------------------

// (d/dlambdabar - d/dlambda) Q_{ah,p} - Q_{ah,p-1} on the circle.
inline double homogeneity_residual(const LaxPoint& pt, const AlphaHat& ah, int p) {
    auto [ql, qb] = q_partials(pt, ah, p);
    Grid prev = q_values(pt, ah, p - 1);
    double m = 0;
    for (std::size_t i = 0; i < ql.size(); ++i)
        m = std::max(m, std::abs(qb[i] - ql[i] - prev[i]));
    return m;
}

// (lambda d/dlambda + lambdabar d/dlambdabar) Q minus its scaling eigenvalue.
inline double euler_scaling_residual(const LaxPoint& pt, const AlphaHat& ah, int p) {
    auto [ql, qb] = q_partials(pt, ah, p);
    Grid Q = q_values(pt, ah, p);
    double m = 0;
    if (ah.tag == AlphaHat::Int) {
        for (std::size_t i = 0; i < Q.size(); ++i)
            m = std::max(m, std::abs(pt.lamv[i] * ql[i] + pt.labv[i] * qb[i] -
                                     double(ah.alpha + p + 1) * Q[i]));
    } else if (ah.tag == AlphaHat::U) {
        for (std::size_t i = 0; i < Q.size(); ++i)
            m = std::max(m, std::abs(pt.lamv[i] * ql[i] + pt.labv[i] * qb[i] -
                                     double(p + 1) * Q[i]));
    } else {
        Grid Qu = q_values(pt, ah_u(), p - 1);
        for (std::size_t i = 0; i < Q.size(); ++i)
            m = std::max(m, std::abs(pt.lamv[i] * ql[i] + pt.labv[i] * qb[i] -
                                     double(p) * Q[i] - 2.0 * Qu[i]));
    }
    return m;
}

// ---- time integration -------------------------------------------------------------

struct EvolveOptions {
    double dt = 1e-3;
    double tail_tol = 1e-6;
    int max_halvings = 8;
    int revalidate_every = 10;  // macro-step size in steps
};

inline LoopLaxPoint evolve(const LoopLaxPoint& start, const HierarchyIndex& idx, double time,
                           const EvolveOptions& opt = {}) {
    require_m1(start);
    if (time < 0 || opt.dt <= 0) throw OutOfDomain("evolve: bad time or dt");
    LoopField L = start.lam, B = start.lab;
    double t = 0, dt = opt.dt;
    int step = 0;
    auto flow_at = [&](const LoopField& l, const LoopField& b) {
        LoopLaxPoint p(l, b);
        if (!p.in_m1) throw LeftManifold("point left M1 during integration at t=" + std::to_string(t));
        return lax_flow(idx, p);
    };
    while (t < time - 1e-15) {
        double h = std::min(dt, time - t);
        int halvings = 0;
        for (;;) {
            FlowVector k1 = flow_at(L, B);
            FlowVector k2 = flow_at(L + (h / 2) * k1.d_lam, B + (h / 2) * k1.d_lab);
            FlowVector k3 = flow_at(L + (h / 2) * k2.d_lam, B + (h / 2) * k2.d_lab);
            FlowVector k4 = flow_at(L + h * k3.d_lam, B + h * k3.d_lab);
            LoopField Ln = L + (h / 6) * (k1.d_lam + 2.0 * k2.d_lam + 2.0 * k3.d_lam + k4.d_lam);
            LoopField Bn = B + (h / 6) * (k1.d_lab + 2.0 * k2.d_lab + 2.0 * k3.d_lab + k4.d_lab);
            if (std::max(tail_health(Ln), tail_health(Bn)) <= opt.tail_tol) {
                L = std::move(Ln);
                B = std::move(Bn);
                t += h;
                break;
            }
            if (++halvings > opt.max_halvings)
                throw TailBlowup("tail exceeded threshold at t=" + std::to_string(t));
            h /= 2;
        }
        if (++step % opt.revalidate_every == 0) {
            LoopLaxPoint chk(L, B);
            if (!chk.in_m1) throw LeftManifold("point left M1 at t=" + std::to_string(t));
            if (!validate(chk.slices[0]).in_m0)
                throw LeftManifold("sample slice left M0 at t=" + std::to_string(t));
        }
    }
    LoopLaxPoint out(L, B);
    if (!out.in_m1) throw LeftManifold("final point left M1");
    return out;
}

}  // namespace toda
