#pragma once

#include "frobenius.hpp"
#include "hierarchy.hpp"

namespace toda {

//------------------------------------------------------------------------
// Deformed flat coordinates theta/y, their orthogonal variants, Levelt
// factorization, monodromy, and the Omega tau-structure.
//------------------------------------------------------------------------

inline constexpr double kZetaDisc = 0.75;

inline void check_zeta(cd zeta) {
    if (zeta == cd(0) || std::abs(zeta) > kZetaDisc) throw ZetaOutOfDisc();
}

// ---- scalar building blocks ---------------------------------------------

namespace detail {

inline cd Dfun(cd x) {  // (1 - e^x)/x, entire
    return std::abs(x) < 1e-8 ? -1.0 - x / 2.0 : (1.0 - std::exp(x)) / x;
}
inline cd Dfun_p(cd x) {
    return std::abs(x) < 1e-8 ? -0.5 - x / 3.0
                              : (-x * std::exp(x) - 1.0 + std::exp(x)) / (x * x);
}
inline cd Dbar(cd xb) {  // (1 - e^{-xb})/xb
    return std::abs(xb) < 1e-8 ? 1.0 - xb / 2.0 : (1.0 - std::exp(-xb)) / xb;
}
inline cd Dbar_p(cd xb) {
    return std::abs(xb) < 1e-8 ? -0.5 + xb / 3.0
                               : (xb * std::exp(-xb) - 1.0 + std::exp(-xb)) / (xb * xb);
}

struct Fam {
    cd F{}, Fx{}, Fxb{}, Fxx{}, Fxxb{}, Fxbxb{};
};

inline Fam fam_int_pt(int al, cd x, cd xb) {
    const double a = al + 1;
    cd W = x + xb, Eh = std::exp((xb - x) / 2.0);
    cd Wa = std::pow(W, a), Wa1 = std::pow(W, a - 1);
    cd Wa2 = (a > 1) ? std::pow(W, a - 2) : cd(0);  // multiplied by (a-1) = 0 below
    Fam f;
    f.F = -Wa / a * Eh;
    f.Fx = Eh * (-Wa1 + Wa / (2 * a));
    f.Fxb = Eh * (-Wa1 - Wa / (2 * a));
    f.Fxx = Eh * (-(a - 1) * Wa2 + Wa1 - Wa / (4 * a));
    f.Fxxb = Eh * (-(a - 1) * Wa2 + Wa / (4 * a));
    f.Fxbxb = Eh * (-(a - 1) * Wa2 - Wa1 - Wa / (4 * a));
    return f;
}

inline Fam fam_u_pt(cd xb) {
    cd E = std::exp(xb);
    Fam f;
    f.F = E - 1.0;
    f.Fxb = E;
    f.Fxbxb = E;
    return f;
}

inline Fam fam_m1_pt(cd x, cd xb, cd L) {
    cd W = x + xb;
    cd Em = std::exp(-x), Eh = std::exp((xb - x) / 2.0);
    cd Nn = ein(-x), D = Dfun(x), Dp = Dfun_p(x);
    cd G = L + Nn - 1.0 - 1.0 / W + 1.0 / x - D;
    cd dxG = (1.0 / W - 1.0 / x) + D + 1.0 / (W * W) - 1.0 / (x * x) - Dp;
    Fam f;
    f.F = -Em * (L + Nn - 1.0) - Eh;
    f.Fx = Em * G + Eh / 2.0;
    f.Fxb = -Em / W - Eh / 2.0;
    f.Fxx = -Em * G + Em * dxG - Eh / 4.0;
    f.Fxxb = Em * (1.0 / W + 1.0 / (W * W)) + Eh / 4.0;
    f.Fxbxb = Em / (W * W) - Eh / 4.0;
    return f;
}

inline Fam fam_v_pt(cd x, cd xb, cd L, cd K) {
    cd W = x + xb;
    cd Em = std::exp(-x), Ep = std::exp(xb);
    cd Nn = ein(-x), Nt = ein(xb);
    cd D = Dfun(x), Dp = Dfun_p(x), Db = Dbar(xb), Dbp = Dbar_p(xb);
    cd G = L + Nn - 1.0 - 1.0 / W + 1.0 / x - D;
    cd Gb = K - Nt - 1.0 + 1.0 / W + 1.0 / xb - Db;
    cd dxG = (1.0 / W - 1.0 / x) + D + 1.0 / (W * W) - 1.0 / (x * x) - Dp;
    cd dxbGb = (1.0 / W + 1.0 / xb - Db) - 1.0 / (W * W) - 1.0 / (xb * xb) - Dbp;
    Fam f;
    f.F = -Em * (L + Nn - 1.0) + Ep * (K - Nt - 1.0);
    f.Fx = Em * G + Ep / W;
    f.Fxb = -Em / W + Ep * Gb;
    f.Fxx = -Em * G + Em * dxG - Ep / (W * W);
    f.Fxxb = Em * (1.0 / W + 1.0 / (W * W)) + Ep / W - Ep / (W * W);
    f.Fxbxb = Em / (W * W) + Ep * Gb + Ep * dxbGb;
    return f;
}

// sum_n (W/2)^{2n+al+1} / (2n+al+1)!  and  sum_n (W/2)^{2n+al} / (2n+al)!
inline cd Tsum(int al, cd W) {
    cd h = W / 2.0, term = std::pow(h, al + 1) / factorial(al + 1), out = term;
    for (int n = 1; n < 300; ++n) {
        term *= h * h / (double(2 * n + al) * double(2 * n + al + 1));
        out += term;
        if (std::abs(term) < 1e-18 * (std::abs(out) + 1)) break;
    }
    return out;
}
inline cd Usum(int al, cd W) {
    cd h = W / 2.0, term = std::pow(h, al) / factorial(al), out = term;
    for (int n = 1; n < 300; ++n) {
        term *= h * h / (double(2 * n + al - 1) * double(2 * n + al));
        out += term;
        if (std::abs(term) < 1e-18 * (std::abs(out) + 1)) break;
    }
    return out;
}

// Orthogonalized families: only the first derivatives are needed.
inline Fam fam_tilde_m1_pt(cd x, cd xb, cd L) {
    cd W = x + xb, Em = std::exp(-x);
    cd Nn = ein(-x), E2 = ein(-W / 2.0), D = Dfun(x);
    cd d = (1.0 - std::exp(W / 2.0)) / W;
    Fam f;
    f.F = -Em * (L + Nn - E2);
    f.Fx = Em * (L + Nn - E2) - Em * (1.0 / W - 1.0 / x + D - d);
    f.Fxb = -Em * (1.0 / W - d);
    return f;
}
inline Fam fam_tilde_v_pt(cd x, cd xb, cd L, cd K) {
    cd W = x + xb, Em = std::exp(-x), Ep = std::exp(xb);
    cd Nn = ein(-x), Nt = ein(xb);
    cd E2 = ein(-W / 2.0), E2h = ein(W / 2.0);
    cd D = Dfun(x), Db = Dbar(xb);
    cd d = (1.0 - std::exp(W / 2.0)) / W, dh = (1.0 - std::exp(-W / 2.0)) / W;
    Fam f;
    f.F = -Em * (L + Nn - E2) + Ep * (K - Nt - E2h);
    f.Fx = Em * (L + Nn - E2) - Em * (1.0 / W - 1.0 / x + D - d) + Ep * (1.0 / W - dh);
    f.Fxb = -Em * (1.0 / W - d) + Ep * (K - Nt - E2h) + Ep * (1.0 / W + 1.0 / xb - Db - dh);
    return f;
}
inline Fam fam_tilde_nonneg_pt(int al, cd x, cd xb) {
    cd W = x + xb, Eh = std::exp((xb - x) / 2.0);
    cd T = Tsum(al, W), U = Usum(al, W);
    double c = -2.0 * double_factorial(2 * al);
    Fam f;
    f.F = c * T * Eh;
    f.Fx = c * (U / 2.0 - T / 2.0) * Eh;
    f.Fxb = c * (U / 2.0 + T / 2.0) * Eh;
    return f;
}

}  // namespace detail

// ---- F families on the circle ------------------------------------------

struct FamilyDerivs {
    Grid F, Fx, Fxb, Fxx, Fxxb, Fxbxb;
};

inline FamilyDerivs family_derivs(const AlphaHat& ah, const LaxPoint& pt, cd zeta) {
    const std::size_t P = pt.lamv.size();
    FamilyDerivs out;
    out.F.resize(P);
    out.Fx.resize(P);
    out.Fxb.resize(P);
    out.Fxx.resize(P);
    out.Fxxb.resize(P);
    out.Fxbxb.resize(P);
    if (ah.tag == AlphaHat::Int && ah.alpha == -1) require_m1(pt);
    if (ah.tag == AlphaHat::V) require_m1(pt);
    for (std::size_t i = 0; i < P; ++i) {
        cd x = zeta * pt.lamv[i], xb = zeta * pt.labv[i];
        detail::Fam f;
        if (ah.tag == AlphaHat::U)
            f = detail::fam_u_pt(xb);
        else if (ah.tag == AlphaHat::V)
            f = detail::fam_v_pt(x, xb, pt.Lv[i], pt.Kv[i]);
        else if (ah.alpha == -1)
            f = detail::fam_m1_pt(x, xb, pt.Lv[i]);
        else
            f = detail::fam_int_pt(ah.alpha, x, xb);
        out.F[i] = f.F;
        out.Fx[i] = f.Fx;
        out.Fxb[i] = f.Fxb;
        out.Fxx[i] = f.Fxx;
        out.Fxxb[i] = f.Fxxb;
        out.Fxbxb[i] = f.Fxbxb;
    }
    return out;
}

inline FamilyDerivs family_tilde_derivs(const AlphaHat& ah, const LaxPoint& pt, cd zeta) {
    if (ah.tag == AlphaHat::U || (ah.tag == AlphaHat::Int && ah.alpha <= -2))
        return family_derivs(ah, pt, zeta);
    const std::size_t P = pt.lamv.size();
    require_m1(pt);
    FamilyDerivs out;
    out.F.resize(P);
    out.Fx.resize(P);
    out.Fxb.resize(P);
    for (std::size_t i = 0; i < P; ++i) {
        cd x = zeta * pt.lamv[i], xb = zeta * pt.labv[i];
        detail::Fam f;
        if (ah.tag == AlphaHat::V)
            f = detail::fam_tilde_v_pt(x, xb, pt.Lv[i], pt.Kv[i]);
        else if (ah.alpha == -1)
            f = detail::fam_tilde_m1_pt(x, xb, pt.Lv[i]);
        else
            f = detail::fam_tilde_nonneg_pt(ah.alpha, x, xb);
        out.F[i] = f.F;
        out.Fx[i] = f.Fx;
        out.Fxb[i] = f.Fxb;
    }
    return out;
}

// Covector triple built from the F partial derivatives.
inline Triple dtriple_from_family(const LaxPoint& pt, const Grid& Fx, const Grid& Fxb) {
    const int N = pt.N();
    Laurent cx = coeffs(Fx, N), cxb = coeffs(Fxb, N);
    Laurent d = cxb - cx;
    return {project(cx, 0, kPosInf) + project(cxb, kNegInf, -1), c0(d), pt.ub1 * d.at(1)};
}

// zeta-power prefactor turning the contour mean of F into theta.
inline int theta_zeta_power(const AlphaHat& ah) {
    if (ah.tag == AlphaHat::U) return -1;
    if (ah.tag == AlphaHat::V || ah.alpha == -1) return 0;
    return -ah.alpha - 1;
}

inline double mu_cotangent(const AlphaHat& ah) {
    if (ah.tag == AlphaHat::U) return 0.5;
    if (ah.tag == AlphaHat::V) return -0.5;
    return ah.alpha + 0.5;
}

inline double mu_tangent(const AlphaHat& ah) { return -mu_cotangent(ah); }

inline cd theta(const AlphaHat& ah, const LaxPoint& pt, cd zeta) {
    check_zeta(zeta);
    FamilyDerivs f = family_derivs(ah, pt, zeta);
    return std::pow(zeta, double(theta_zeta_power(ah))) * c0(coeffs(f.F, pt.N()));
}

inline Triple dtheta(const AlphaHat& ah, const LaxPoint& pt, cd zeta) {
    check_zeta(zeta);
    FamilyDerivs f = family_derivs(ah, pt, zeta);
    return std::pow(zeta, double(theta_zeta_power(ah) + 1)) *
           dtriple_from_family(pt, f.Fx, f.Fxb);
}

inline cd theta_tilde(const AlphaHat& ah, const LaxPoint& pt, cd zeta) {
    check_zeta(zeta);
    FamilyDerivs f = family_tilde_derivs(ah, pt, zeta);
    return std::pow(zeta, double(theta_zeta_power(ah))) * c0(coeffs(f.F, pt.N()));
}

inline Triple dtheta_tilde(const AlphaHat& ah, const LaxPoint& pt, cd zeta) {
    check_zeta(zeta);
    FamilyDerivs f = family_tilde_derivs(ah, pt, zeta);
    return std::pow(zeta, double(theta_zeta_power(ah) + 1)) *
           dtriple_from_family(pt, f.Fx, f.Fxb);
}

// Multivalued y built from theta; log_zeta allows explicit branch continuation.
inline cd y_function(const AlphaHat& ah, const LaxPoint& pt, cd zeta, cd log_zeta) {
    if (ah.tag == AlphaHat::V)
        return std::exp(-0.5 * log_zeta) * theta(ah_v(), pt, zeta) +
               2.0 * std::exp(0.5 * log_zeta) * log_zeta * theta(ah_u(), pt, zeta);
    return std::exp(mu_cotangent(ah) * log_zeta) * theta(ah, pt, zeta);
}

inline cd y_function(const AlphaHat& ah, const LaxPoint& pt, cd zeta) {
    return y_function(ah, pt, zeta, std::log(zeta));
}

inline Triple dy_differential(const AlphaHat& ah, const LaxPoint& pt, cd zeta, cd log_zeta) {
    if (ah.tag == AlphaHat::V) {
        cd a = std::exp(-0.5 * log_zeta), b = 2.0 * std::exp(0.5 * log_zeta) * log_zeta;
        return a * dtheta(ah_v(), pt, zeta) + b * dtheta(ah_u(), pt, zeta);
    }
    return std::exp(mu_cotangent(ah) * log_zeta) * dtheta(ah, pt, zeta);
}

inline Triple dy_differential(const AlphaHat& ah, const LaxPoint& pt, cd zeta) {
    return dy_differential(ah, pt, zeta, std::log(zeta));
}

// ---- Taylor coefficients in zeta ------------------------------------------

// Direct form: the p-th coefficient of theta is the contour mean of Q_{ah,p}.
inline cd theta_coeff(const AlphaHat& ah, int p, const LaxPoint& pt) {
    return c0(coeffs(q_values(pt, ah, p), pt.N()));
}

// Cauchy extraction of the p-th coefficient over a small zeta-circle.
inline cd theta_coeff_cauchy(const AlphaHat& ah, int p, const LaxPoint& pt, double r = 0.1,
                             int n = 64) {
    cd acc = 0;
    for (int i = 0; i < n; ++i) {
        cd z = r * std::exp(cd(0, 2 * std::numbers::pi * i / n));
        acc += theta(ah, pt, z) * std::exp(cd(0, -2 * std::numbers::pi * i * p / n));
    }
    return acc / (double(n) * std::pow(r, p));
}

inline cd theta_tilde_coeff_cauchy(const AlphaHat& ah, int p, const LaxPoint& pt,
                                   double r = 0.1, int n = 64) {
    cd acc = 0;
    for (int i = 0; i < n; ++i) {
        cd z = r * std::exp(cd(0, 2 * std::numbers::pi * i / n));
        acc += theta_tilde(ah, pt, z) * std::exp(cd(0, -2 * std::numbers::pi * i * p / n));
    }
    return acc / (double(n) * std::pow(r, p));
}

inline Triple dtheta_coeff(const AlphaHat& ah, int p, const LaxPoint& pt, double r = 0.1,
                           int n = 64) {
    Triple acc{Laurent(pt.N()), 0, 0};
    for (int i = 0; i < n; ++i) {
        cd z = r * std::exp(cd(0, 2 * std::numbers::pi * i / n));
        cd ph = std::exp(cd(0, -2 * std::numbers::pi * i * p / n)) /
                (double(n) * std::pow(r, p));
        acc = acc + ph * dtheta(ah, pt, z);
    }
    return acc;
}

// ---- horizontality of the F families ---------------------------------------

struct HorizontalityResidual {
    double r_first = 0;   // (F_xxb - F_xx - F_x)_{>= -1}
    double r_second = 0;  // (F_xbxb - F_xxb - F_xb)_{<= 1}
    double r_rational = 0;  // F_xb - F_x - F minus its rational closed form
    double r_u = 0;         // d/du [e^u (F_xb - F_x - F)]_1
};

inline HorizontalityResidual f_horizontality_residual(const AlphaHat& ah, const LaxPoint& pt,
                                                      cd zeta) {
    check_zeta(zeta);
    const int N = pt.N();
    FamilyDerivs f = family_derivs(ah, pt, zeta);
    HorizontalityResidual out;
    out.r_first = norm_inf(project(coeffs(f.Fxxb - f.Fxx - f.Fx, N), -1, kPosInf));
    out.r_second = norm_inf(project(coeffs(f.Fxbxb - f.Fxxb - f.Fxb, N), kNegInf, 1));

    const std::size_t P = pt.lamv.size();
    Grid d = f.Fxb - f.Fx - f.F;
    Grid expect(P), du_d(P);  // closed form of d and its u-derivative
    Grid z = unit_circle(int(P));
    for (std::size_t i = 0; i < P; ++i) {
        cd x = zeta * pt.lamv[i], xb = zeta * pt.labv[i];
        cd eu_z = pt.ub1 / z[i];  // d lambda/du = -e^u/z, d lambdabar/du = e^u/z
        if (ah.tag == AlphaHat::U) {
            expect[i] = 1.0;
            du_d[i] = 0.0;
        } else if (ah.tag == AlphaHat::V) {
            expect[i] = 1.0 / xb - 1.0 / x;
            du_d[i] = -zeta * eu_z / (xb * xb) - zeta * eu_z / (x * x);
        } else if (ah.alpha == -1) {
            expect[i] = -1.0 / x;
            du_d[i] = -zeta * eu_z / (x * x);
        }
    }
    out.r_rational = norm_inf(coeffs(d - expect, N));
    Grid term(P);
    for (std::size_t i = 0; i < P; ++i) term[i] = pt.ub1 * (expect[i] + du_d[i]);
    out.r_u = std::abs(coeffs(term, N).at(1));
    return out;
}

// ---- deformed flatness -------------------------------------------------------

// | d_X dy - (Gamma_X + zeta C_X)(dy) | via central differences along X.
inline double deformed_flatness_residual(const AlphaHat& ah, cd zeta, const Triple& X,
                                         const LaxPoint& pt, double h = 1e-6) {
    Triple dp = dy_differential(ah, perturb(pt, X, +h), zeta);
    Triple dm = dy_differential(ah, perturb(pt, X, -h), zeta);
    Triple fd = (1.0 / (2 * h)) * (dp - dm);
    Triple base = dy_differential(ah, pt, zeta);
    Triple C = mult_operator(X, base, pt);
    Triple rhs = christoffel(X, base, pt) + zeta * C;
    return norm_inf(fd - rhs);
}

// | d_zeta (eta# dy) - (U + V/zeta)(eta# dy) | with U = C_E, V on tangents.
inline double zeta_ode_residual(const AlphaHat& ah, cd zeta, const LaxPoint& pt,
                                double h = 1e-6) {
    Triple gp = eta_sharp(dy_differential(ah, pt, zeta + h), pt);
    Triple gm = eta_sharp(dy_differential(ah, pt, zeta - h), pt);
    Triple fd = (1.0 / (2 * h)) * (gp - gm);
    Triple d = dy_differential(ah, pt, zeta);
    Triple U = eta_sharp(u_operator(d, pt), pt);
    Triple V = -1.0 * eta_sharp(v_operator(d, pt), pt);
    return norm_inf(fd - (U + (1.0 / zeta) * V));
}

// ---- operator matrices on the flat window -------------------------------------

using Matrix = std::vector<std::vector<cd>>;

inline Matrix mat_zero(std::size_t n) { return Matrix(n, std::vector<cd>(n, cd(0))); }

inline Matrix mat_mul(const Matrix& A, const Matrix& B) {
    std::size_t n = A.size();
    Matrix C = mat_zero(n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < n; ++k)
            for (std::size_t j = 0; j < n; ++j) C[i][j] += A[i][k] * B[k][j];
    return C;
}

inline double mat_norm(const Matrix& A) {
    double m = 0;
    for (auto& r : A)
        for (auto& x : r) m = std::max(m, std::abs(x));
    return m;
}

inline Matrix mat_sub(Matrix A, const Matrix& B) {
    for (std::size_t i = 0; i < A.size(); ++i)
        for (std::size_t j = 0; j < A.size(); ++j) A[i][j] -= B[i][j];
    return A;
}

// Columns: flat components of eta#(dfun(beta_hat)) over the window.
template <class DFun>
Matrix window_matrix(const LaxPoint& pt, int A, DFun&& dfun) {
    auto W = flat_window(A);
    const std::size_t n = W.size();
    std::vector<Laurent> row_dt;  // z-parts of dt^gamma for integer rows
    row_dt.reserve(n);
    for (auto& gh : W)
        row_dt.push_back(gh.tag == AlphaHat::Int ? dt_differential(gh, pt).z
                                                 : Laurent(pt.N()));
    Matrix M = mat_zero(n);
    for (std::size_t j = 0; j < n; ++j) {
        Triple V = eta_sharp(dfun(W[j]), pt);
        for (std::size_t i = 0; i < n; ++i) {
            if (W[i].tag == AlphaHat::V)
                M[i][j] = V.v;
            else if (W[i].tag == AlphaHat::U)
                M[i][j] = V.u;
            else
                M[i][j] = c0(mul(row_dt[i], V.z));
        }
    }
    return M;
}

inline Matrix theta_matrix(cd zeta, const LaxPoint& pt, int A) {
    return window_matrix(pt, A, [&](const AlphaHat& bh) { return dtheta(bh, pt, zeta); });
}

inline Matrix fundamental_matrix(cd zeta, const LaxPoint& pt, int A, cd log_zeta) {
    return window_matrix(pt, A,
                         [&](const AlphaHat& bh) { return dy_differential(bh, pt, zeta, log_zeta); });
}

inline Matrix fundamental_matrix(cd zeta, const LaxPoint& pt, int A) {
    return fundamental_matrix(zeta, pt, A, std::log(zeta));
}

// zeta^V zeta^R in the window basis (exponents per column label).
inline Matrix zv_zr_matrix(cd zeta, int A, cd log_zeta) {
    auto W = flat_window(A);
    const std::size_t n = W.size();
    Matrix M = mat_zero(n);
    std::size_t iu = 0, iv = 0;
    for (std::size_t i = 0; i < n; ++i) {
        M[i][i] = std::exp(mu_cotangent(W[i]) * log_zeta);
        if (W[i].tag == AlphaHat::U) iu = i;
        if (W[i].tag == AlphaHat::V) iv = i;
    }
    M[iu][iv] = M[iu][iu] * 2.0 * log_zeta;  // R(column v) = 2 (row u)
    (void)zeta;
    return M;
}

inline double levelt_residual(cd zeta, const LaxPoint& pt, int A) {
    cd lz = std::log(zeta);
    Matrix Y = fundamental_matrix(zeta, pt, A, lz);
    Matrix Th = theta_matrix(zeta, pt, A);
    return mat_norm(mat_sub(Y, mat_mul(Th, zv_zr_matrix(zeta, A, lz))));
}

// Theta(0) as the mean of Theta over a small zeta-circle; expected identity.
inline double theta_matrix_origin_residual(const LaxPoint& pt, int A, double r = 0.1,
                                           int n = 64) {
    auto W = flat_window(A);
    Matrix acc = mat_zero(W.size());
    for (int i = 0; i < n; ++i) {
        cd z = r * std::exp(cd(0, 2 * std::numbers::pi * i / n));
        Matrix M = theta_matrix(z, pt, A);
        for (std::size_t a = 0; a < W.size(); ++a)
            for (std::size_t b = 0; b < W.size(); ++b) acc[a][b] += M[a][b] / double(n);
    }
    for (std::size_t a = 0; a < W.size(); ++a) acc[a][a] -= 1.0;
    return mat_norm(acc);
}

// Negative-frequency content of Theta entries around a zeta-circle; nonzero
// values would signal zeta^{-k} or log zeta content.
inline double theta_matrix_analyticity_residual(const LaxPoint& pt, int A, double r = 0.3,
                                                int n = 32) {
    auto W = flat_window(A);
    std::vector<Matrix> samples;
    samples.reserve(n);
    for (int i = 0; i < n; ++i)
        samples.push_back(
            theta_matrix(r * std::exp(cd(0, 2 * std::numbers::pi * i / n)), pt, A));
    double worst = 0;
    std::vector<cd> buf(n);
    for (std::size_t a = 0; a < W.size(); ++a)
        for (std::size_t b = 0; b < W.size(); ++b) {
            for (int i = 0; i < n; ++i) buf[i] = samples[i][a][b];
            fft_inplace(buf, false);
            for (int k = n / 2 + 1; k < n; ++k)  // negative frequencies
                worst = std::max(worst, std::abs(buf[k]) / double(n));
        }
    return worst;
}

// ---- monodromy data -------------------------------------------------------------

struct MonodromyData {
    std::vector<double> mu;  // tangent-space eigenvalues over the window
    Matrix R;                // R(d/dv) = 2 d/du, zero otherwise

    explicit MonodromyData(int A) {
        auto W = flat_window(A);
        R = mat_zero(W.size());
        std::size_t iu = 0, iv = 0;
        for (std::size_t i = 0; i < W.size(); ++i) {
            mu.push_back(mu_tangent(W[i]));
            if (W[i].tag == AlphaHat::U) iu = i;
            if (W[i].tag == AlphaHat::V) iv = i;
        }
        R[iu][iv] = 2.0;
    }
};

// R^2, eta-symmetry of R, and the grading relation zeta^V R zeta^-V = zeta R.
inline double monodromy_invariants_residual(int A, cd zeta = cd(0.3)) {
    MonodromyData md(A);
    auto W = flat_window(A);
    const std::size_t n = W.size();
    double r = mat_norm(mat_mul(md.R, md.R));
    auto E = eta_gram(A);
    for (std::size_t i = 0; i < n; ++i)  // eta(R x_i, x_j) = eta(x_i, R x_j)
        for (std::size_t j = 0; j < n; ++j) {
            cd lhs = 0, rhs = 0;
            for (std::size_t k = 0; k < n; ++k) {
                lhs += E[k][j] * md.R[k][i];
                rhs += E[i][k] * md.R[k][j];
            }
            r = std::max(r, std::abs(lhs - rhs));
        }
    cd lz = std::log(zeta);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            // grading exponents of the factorization are -mu_tangent
            cd conj = std::exp(-md.mu[i] * lz) * md.R[i][j] * std::exp(md.mu[j] * lz);
            r = std::max(r, std::abs(conj - zeta * md.R[i][j]));
        }
    return r;
}

// Monodromy of y_v around zeta = 0: y_v -> e^{-i pi}(y_v + 4 pi i y_u).
inline double y_monodromy_residual(const LaxPoint& pt, cd zeta) {
    cd lz = std::log(zeta);
    cd yv0 = y_function(ah_v(), pt, zeta, lz);
    cd yu0 = y_function(ah_u(), pt, zeta, lz);
    cd yv1 = y_function(ah_v(), pt, zeta, lz + cd(0, 2 * std::numbers::pi));
    cd expect = std::exp(cd(0, -std::numbers::pi)) *
                (yv0 + cd(0, 4 * std::numbers::pi) * yu0);
    return std::abs(yv1 - expect);
}

// ---- change of basis to the orthogonal families ----------------------------------

inline cd c_matrix_entry(const AlphaHat& gh, const AlphaHat& ah) {
    if (ah.tag == AlphaHat::V) {
        if (gh.tag == AlphaHat::V) return 1.0;
        if (gh.tag == AlphaHat::Int && gh.alpha >= 0 && gh.alpha % 2 == 0)
            return (harmonic(gh.alpha + 1) - 1.0) / double_factorial(2 * gh.alpha);
        return 0.0;
    }
    if (ah.tag == AlphaHat::U) return gh.tag == AlphaHat::U ? 1.0 : 0.0;
    if (gh.tag != AlphaHat::Int) return 0.0;
    const int g = gh.alpha, a = ah.alpha;
    if (a <= -1 || g <= -1) {
        if (g == a && g <= -1) return 1.0;
        if (a == -1 && g >= 0)
            return std::pow(-1.0, g) * (harmonic(g + 1) - 1.0) /
                   (2.0 * double_factorial(2 * g));
        return 0.0;
    }
    if (g >= a && (g - a) % 2 == 0) return double_factorial(2 * a) / double_factorial(2 * g);
    return 0.0;
}

// theta~_ah(zeta) = sum_gh theta_gh(zeta) C^gh_ah zeta^{mu_gh - mu_ah}.
inline double c_relation_residual(const AlphaHat& ah, const LaxPoint& pt, cd zeta, int A) {
    cd s = 0;
    std::vector<AlphaHat> gs;
    for (int g = -A - 2; g <= A + 10; ++g) gs.push_back(ah_int(g));
    gs.push_back(ah_v());
    gs.push_back(ah_u());
    for (auto& gh : gs) {
        cd c = c_matrix_entry(gh, ah);
        if (c == cd(0)) continue;
        s += theta(gh, pt, zeta) * c *
             std::pow(zeta, mu_cotangent(gh) - mu_cotangent(ah));
    }
    return std::abs(theta_tilde(ah, pt, zeta) - s);
}

// Gram of <dtheta~(-zeta), dtheta~(zeta)> minus eta on the window.
inline double orthogonality_residual(cd zeta, const LaxPoint& pt, int A) {
    auto W = flat_window(A);
    auto E = eta_gram(A);
    std::vector<Triple> dm, dp;
    for (auto& ah : W) {
        dm.push_back(dtheta_tilde(ah, pt, -zeta));
        dp.push_back(dtheta_tilde(ah, pt, zeta));
    }
    double r = 0;
    for (std::size_t i = 0; i < W.size(); ++i)
        for (std::size_t j = 0; j < W.size(); ++j)
            r = std::max(r, std::abs(eta_cotangent(dm[i], dp[j], pt) - E[i][j]));
    return r;
}

// (Q~_{ah,p})_0 against the Cauchy coefficient of theta~ and the finite C-sum.
inline double q_tilde_consistency(const AlphaHat& ah, int p, const LaxPoint& pt) {
    cd direct = c0(coeffs(q_tilde_values(pt, ah, p), pt.N()));
    double r = std::abs(direct - theta_tilde_coeff_cauchy(ah, p, pt));
    cd sum = 0;
    std::vector<AlphaHat> gs;
    int gmax = p + std::abs(ah.tag == AlphaHat::Int ? ah.alpha : 0) + 4;
    for (int g = -gmax; g <= gmax; ++g) gs.push_back(ah_int(g));
    gs.push_back(ah_v());
    gs.push_back(ah_u());
    for (auto& gh : gs) {
        cd c = c_matrix_entry(gh, ah);
        if (c == cd(0)) continue;
        double shift = mu_cotangent(gh) - mu_cotangent(ah);
        int q = p - int(std::lround(shift));
        if (q < 0) continue;
        sum += theta_coeff(gh, q, pt) * c;
    }
    return std::max(r, std::abs(direct - sum));
}

// ---- Omega tau-structure ------------------------------------------------------------

inline cd omega(const HierarchyIndex& a, const HierarchyIndex& b, const LaxPoint& pt) {
    cd s = 0;
    for (int m = 0; m <= b.p; ++m) {
        Triple da = dtheta_coeff(a.ah, a.p + m + 1, pt);
        Triple db = dtheta_coeff(b.ah, b.p - m, pt);
        s += std::pow(-1.0, m) * eta_cotangent(da, db, pt);
    }
    return s;
}

// max over x of | d/dx Omega_{a;b} - d theta_{a,p} / dt^{b,q} |.
inline double omega_xderiv_residual(const HierarchyIndex& a, const HierarchyIndex& b,
                                    const LoopLaxPoint& lp) {
    const int M = lp.M();
    std::vector<cd> om(M);
    for (int j = 0; j < M; ++j) om[j] = omega(a, b, lp.slices[j]);
    fft_inplace(om, false);
    for (int j = 0; j < M; ++j) {
        int m = j <= M / 2 ? j : j - M;
        if (j == M / 2) m = -M / 2;
        om[j] *= cd(0, m);
    }
    fft_inplace(om, true);
    FlowVector fb = lax_flow(b, lp);
    std::vector<cd> dth = loop_c0(q_time_derivative(lp, a.ah, a.p, fb));
    double r = 0;
    for (int j = 0; j < M; ++j) r = std::max(r, std::abs(om[j] - dth[j]));
    return r;
}

}  // namespace toda
