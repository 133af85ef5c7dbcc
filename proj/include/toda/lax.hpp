#pragma once

#include "laurent.hpp"
#include "special.hpp"

namespace toda {

//------------------------------------------------------------------------
// Points (lambda, lambdabar) of the Lax-symbol manifolds and the dual
// pair/triple representations of (co)tangent vectors.
//------------------------------------------------------------------------

struct LaxPoint {
    Laurent lam, lab;   // lambda, lambdabar
    Laurent w, zwp;     // w = lambda + lambdabar, z w'(z)
    Grid lamv, labv, wv, zwpv;
    cd ub1{}, v{}, u{};  // ub1 = coefficient of z^-1 in lambdabar, u = log ub1

    bool in_m1 = false;
    int wind_lam = 0, wind_lab = 0, wind_w = 0;
    Laurent log_w_over_z, log_lam_over_z, log_zlab;  // winding-normalized logs
    Grid Lv, Kv;  // values of log(1 + lab/lam) and log(lab * w)

    LaxPoint(Laurent lam_, Laurent lab_) : lam(std::move(lam_)), lab(std::move(lab_)) {
        w = lam + lab;
        zwp = z_deriv(w);
        lamv = grid(lam);
        labv = grid(lab);
        wv = grid(w);
        zwpv = grid(zwp);
        ub1 = lab.at(-1);
        v = lab.at(0);
        u = (ub1 != cd(0)) ? std::log(ub1) : cd(0);
        try {
            auto gl = circle_log(lam);
            auto gb = circle_log(lab);
            auto gw = circle_log(w);
            wind_lam = gl.winding;
            wind_lab = gb.winding;
            wind_w = gw.winding;
            if (wind_lam == 1 && wind_lab == -1 && wind_w == 1) {
                in_m1 = true;
                log_lam_over_z = gl.log;
                log_zlab = gb.log;
                log_w_over_z = gw.log;
                Lv = grid(gw.log - gl.log);
                Kv = grid(gb.log + gw.log);
            }
        } catch (const NearZeroOnCircle&) {
            in_m1 = false;
        }
    }

    int N() const { return lam.N; }
};

inline void require_m1(const LaxPoint& pt) {
    if (!pt.in_m1) throw NotInM1();
}

// ---- w-coordinates --------------------------------------------------------

struct WCoords {
    Laurent w;
    cd v, u;
};

inline WCoords to_w_coords(const LaxPoint& pt) {
    if (pt.ub1 == cd(0)) throw DegenerateLeadingCoefficient();
    return {pt.w, pt.v, pt.u};
}

inline LaxPoint from_w_coords(const WCoords& wc) {
    const int N = wc.w.N;
    cd eu = std::exp(wc.u);
    Laurent lam = project(wc.w, kNegInf, 0);
    lam.at(1) += 1.0;
    lam.at(0) -= wc.v;
    lam.at(-1) -= eu;
    Laurent lab = project(wc.w, 1, kPosInf);
    lab.at(1) -= 1.0;
    lab.at(0) = wc.v;
    lab.at(-1) = eu;
    (void)N;
    return LaxPoint(std::move(lam), std::move(lab));
}

// ---- validation ------------------------------------------------------------

struct ValidationReport {
    bool in_m1 = false, in_m0 = false;
    bool lambda_normalized = false;  // lambda = z + O(1), lambdabar pole only at 0
    int wind_lam = 0, wind_lab = 0, wind_w = 0;
    int gamma_winding = 0;      // winding of Gamma = w(S^1) around the origin
    double min_wprime = 0;      // min |w'| on the circle
    double min_curve_gap = 0;   // min non-adjacent sample distance / diameter
    bool self_intersecting = false;
    bool has_ub1 = false;
};

namespace detail {

// Evaluate w at an arbitrary angle by direct mode summation.
inline cd eval_series(const Laurent& f, double th) {
    cd s = 0;
    for (int k = -f.N; k <= f.N; ++k) s += f.at(k) * std::exp(cd(0, k * th));
    return s;
}

}  // namespace detail

inline ValidationReport validate(const LaxPoint& pt) {
    ValidationReport r;
    r.in_m1 = pt.in_m1;
    r.wind_lam = pt.wind_lam;
    r.wind_lab = pt.wind_lab;
    r.wind_w = pt.wind_w;
    r.has_ub1 = pt.ub1 != cd(0);

    bool norm_ok = std::abs(pt.lam.at(1) - cd(1)) < 1e-13;
    for (int k = 2; k <= pt.N(); ++k) norm_ok = norm_ok && pt.lam.at(k) == cd(0);
    for (int k = -pt.N(); k < -1; ++k) norm_ok = norm_ok && pt.lab.at(k) == cd(0);
    r.lambda_normalized = norm_ok;

    double mn = std::numeric_limits<double>::max();
    for (auto& x : pt.zwpv) mn = std::min(mn, std::abs(x));  // |w'| = |z w'| on |z|=1
    r.min_wprime = mn;

    const int P = int(pt.wv.size());
    double diam = 0;
    for (int i = 0; i < P; ++i)
        for (int j = i + 1; j < P; ++j) diam = std::max(diam, std::abs(pt.wv[i] - pt.wv[j]));
    double gap = std::numeric_limits<double>::max();
    int gi = 0, gj = 0;
    for (int i = 0; i < P; ++i)
        for (int j = i + 1; j < P; ++j) {
            int d = std::min(j - i, P - (j - i));
            if (d < 3) continue;  // adjacent samples of the same arc
            double dist = std::abs(pt.wv[i] - pt.wv[j]);
            if (dist < gap) { gap = dist; gi = i; gj = j; }
        }
    r.min_curve_gap = diam > 0 ? gap / diam : 0.0;
    r.self_intersecting = false;
    if (diam > 0 && gap < 1e-6 * diam) {
        // refine the two nearest arcs before declaring an intersection
        double refined = gap;
        const double h = 2 * std::numbers::pi / P;
        for (int a = -8; a <= 8; ++a)
            for (int b = -8; b <= 8; ++b) {
                cd wa = detail::eval_series(pt.w, (gi + a / 8.0) * h);
                cd wb = detail::eval_series(pt.w, (gj + b / 8.0) * h);
                refined = std::min(refined, std::abs(wa - wb));
            }
        r.self_intersecting = refined < 1e-9 * diam;
    }

    try {
        Grid shifted = pt.wv;  // Gamma relative to the origin
        check_nonvanishing(shifted);
        r.gamma_winding = int(std::lround(winding_of_values(shifted)));
    } catch (const NearZeroOnCircle&) {
        r.gamma_winding = 0;
    }

    r.in_m0 = r.in_m1 && r.has_ub1 && r.min_wprime > 1e-10 && !r.self_intersecting &&
              r.gamma_winding == 1;
    return r;
}

inline void require_m0(const LaxPoint& pt) {
    if (!validate(pt).in_m0) throw NotInM0();
}

// ---- tangent / cotangent representations ----------------------------------

// Triple form (f(z), f_v, f_u); used for both vectors and covectors.
struct Triple {
    Laurent z;
    cd v{}, u{};
};

struct PairRep {
    Laurent a, ab;
};

inline Triple operator+(Triple a, const Triple& b) {
    a.z = a.z + b.z;
    a.v += b.v;
    a.u += b.u;
    return a;
}
inline Triple operator-(Triple a, const Triple& b) {
    a.z = a.z - b.z;
    a.v -= b.v;
    a.u -= b.u;
    return a;
}
inline Triple operator*(cd s, Triple a) {
    a.z = s * a.z;
    a.v *= s;
    a.u *= s;
    return a;
}
inline Triple operator*(double s, Triple a) { return cd(s) * std::move(a); }
inline Triple operator-(Triple a) { return cd(-1) * std::move(a); }

inline double norm_inf(const Triple& t) {
    return std::max({norm_inf(t.z), std::abs(t.v), std::abs(t.u)});
}

inline Triple covector_pair_to_triple(const PairRep& p, const LaxPoint& pt) {
    Laurent d = p.ab - p.a;
    return {p.a + project(p.ab, kNegInf, -1), c0(d), pt.ub1 * d.at(1)};
}

inline PairRep covector_triple_to_pair(const Triple& t, const LaxPoint& pt) {
    if (pt.ub1 == cd(0)) throw DegenerateLeadingCoefficient();
    Laurent a = project(t.z, 0, kPosInf);
    Laurent ab = project(t.z, kNegInf, -1);
    ab.at(0) = t.z.at(0) + t.v;
    ab.at(1) = t.z.at(1) + t.u / pt.ub1;
    return {a, ab};
}

inline Triple vector_pair_to_triple(const PairRep& p, const LaxPoint& pt) {
    if (pt.ub1 == cd(0)) throw DegenerateLeadingCoefficient();
    return {p.a + p.ab, c0(p.ab), p.ab.at(-1) / pt.ub1};
}

inline PairRep vector_triple_to_pair(const Triple& t, const LaxPoint& pt) {
    Laurent ab = project(t.z, 1, kPosInf);
    ab.at(-1) = pt.ub1 * t.u;
    ab.at(0) = t.v;
    Laurent a = project(t.z, kNegInf, 0);
    a.at(-1) = t.z.at(-1) - pt.ub1 * t.u;
    a.at(0) = t.z.at(0) - t.v;
    return {a, ab};
}

inline cd pairing(const PairRep& alpha, const PairRep& X) {
    return c0(mul(alpha.a, X.a)) + c0(mul(alpha.ab, X.ab));
}

inline cd pairing(const Triple& alpha, const Triple& X) {
    return c0(mul(alpha.z, X.z)) + alpha.v * X.v + alpha.u * X.u;
}

// ---- flat metric eta --------------------------------------------------------

inline Triple eta_sharp(const Triple& alpha, const LaxPoint& pt) {
    return {mul(pt.zwp, alpha.z), alpha.u, alpha.v};
}

inline Triple eta_star(const Triple& X, const LaxPoint& pt) {
    return {coeffs(grid(X.z) / pt.zwpv, pt.N()), X.u, X.v};
}

inline cd eta_cotangent(const Triple& a, const Triple& b, const LaxPoint& pt) {
    return c0(mul(mul(a.z, b.z), pt.zwp)) + a.v * b.u + a.u * b.v;
}

inline cd eta_tangent(const Triple& X, const Triple& Y, const LaxPoint& pt) {
    return c0(coeffs(grid(X.z) * grid(Y.z) / pt.zwpv, pt.N())) + X.u * Y.v + X.v * Y.u;
}

// ---- connection -------------------------------------------------------------

// Christoffel term Gamma_X(alpha) = (alpha'(z) X(z) / w'(z), 0, 0).
inline Triple christoffel(const Triple& X, const Triple& alpha, const LaxPoint& pt) {
    return {coeffs(grid(z_deriv(alpha.z)) * grid(X.z) / pt.zwpv, pt.N()), 0, 0};
}

// nabla_X alpha given the directional derivative of alpha along X.
inline Triple covariant_deriv(const Triple& dX_alpha, const Triple& X, const Triple& alpha,
                              const LaxPoint& pt) {
    return dX_alpha - christoffel(X, alpha, pt);
}

// Move the point by h * X (X a tangent triple) in w-coordinates.
inline LaxPoint perturb(const LaxPoint& pt, const Triple& X, double h) {
    WCoords wc = to_w_coords(pt);
    wc.w = wc.w + h * X.z;
    wc.v += h * X.v;
    wc.u += h * X.u;
    return from_w_coords(wc);
}

// ---- grading and multiplication operators -----------------------------------

// V(alpha) = (-alpha/2 - z alpha' w/(z w'), -alpha_v/2, alpha_u/2) on covectors.
inline Triple v_operator(const Triple& alpha, const LaxPoint& pt) {
    Laurent za = z_deriv(alpha.z);
    Laurent corr = coeffs(grid(za) * pt.wv / pt.zwpv, pt.N());
    return {-0.5 * alpha.z - corr, -0.5 * alpha.v, 0.5 * alpha.u};
}

inline Triple unit_field(const LaxPoint& pt) {  // e = d/dv
    return {Laurent(pt.N()), 1.0, 0.0};
}

inline Triple euler_field(const LaxPoint& pt) {  // E = (w - z w', v, 2)
    return {pt.w - pt.zwp, pt.v, 2.0};
}

// Product of two cotangent vectors in pair form.
inline PairRep cotangent_product(const PairRep& al, const PairRep& be, const LaxPoint& pt) {
    const int N = pt.N();
    Laurent zlp = z_deriv(pt.lam), zbp = z_deriv(pt.lab);
    Laurent A = mul(zlp, be.a) + mul(zbp, be.ab);
    Laurent B = mul(zlp, al.a) + mul(zbp, al.ab);
    Laurent first = mul(al.a, project(A, 1, kPosInf)) + mul(project(B, 1, kPosInf), be.a) -
                    project(mul(zlp, mul(al.a, be.a)) +
                                mul(zbp, mul(al.a, be.ab) + mul(al.ab, be.a)),
                            0, kPosInf);
    Laurent second = -mul(al.ab, project(A, kNegInf, 0)) - mul(project(B, kNegInf, 0), be.ab) +
                     project(mul(zbp, mul(al.ab, be.ab)) +
                                 mul(zlp, mul(al.a, be.ab) + mul(al.ab, be.a)),
                             kNegInf, 1);
    (void)N;
    return {first, second};
}

// Multiplication operator C_X on cotangent triples; equals eta_*(X) . alpha.
inline Triple mult_operator(const Triple& X, const Triple& alpha, const LaxPoint& pt) {
    const int N = pt.N();
    const cd eu = pt.ub1;
    Grid Xv = grid(X.z);
    Laurent Xw = coeffs(Xv / pt.zwpv, N);  // X(z)/(z w'(z))
    Laurent t1 = mul(project(mul(pt.zwp, alpha.z), 1, kPosInf), Xw);
    Laurent t2 = -mul(project(pt.zwp, 1, kPosInf), mul(alpha.z, Xw));
    Laurent zpart = mul(series(N, {{1, 1.0}, {-1, eu}}), alpha.z) +
                    alpha.v * eu * series(N, {{-1, 1.0}}) + series(N, {{0, alpha.u}});
    Laurent t3 = mul(Xw, zpart);
    Laurent t4 = project(mul(project(X.z, 1, kPosInf), alpha.z), kNegInf, -1);
    Laurent t5 = -1.0 * project(mul(project(X.z, kNegInf, 0), alpha.z), 0, kPosInf);
    Laurent t6 = eu * X.u * (mul(series(N, {{-1, 1.0}}), alpha.z) + alpha.v * series(N, {{-1, 1.0}}));
    Laurent t7 = X.v * alpha.z;
    Laurent comp_w = t1 + t2 + t3 + t4 + t5 + t6 + t7;
    cd comp_v = c0(mul(X.z, alpha.z)) + X.u * alpha.u + X.v * alpha.v;
    Laurent big = mul(X.z + X.u * pt.zwp, alpha.z + series(N, {{0, alpha.v}}));
    cd comp_u = eu * big.at(1) - eu * X.u * alpha.v + X.v * alpha.u;
    return {comp_w, comp_v, comp_u};
}

inline Triple u_operator(const Triple& alpha, const LaxPoint& pt) {  // C_E
    return mult_operator(euler_field(pt), alpha, pt);
}

}  // namespace toda
