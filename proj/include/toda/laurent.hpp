#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "errors.hpp"
#include "fft.hpp"

namespace toda {

//------------------------------------------------------------------------
// Truncated two-sided Laurent series on the unit circle, modes in [-N, N].
//------------------------------------------------------------------------

struct Laurent {
    int N = 0;
    std::vector<cd> c;  // c[k + N] is the coefficient of z^k

    Laurent() = default;
    explicit Laurent(int n) : N(n), c(2 * n + 1) {}

    cd& at(int k) { return c[k + N]; }
    const cd& at(int k) const { return c[k + N]; }
};

inline constexpr int kNegInf = std::numeric_limits<int>::min();
inline constexpr int kPosInf = std::numeric_limits<int>::max();

// Dealiasing grid: next power of two >= 2(2N+1).
inline int grid_size(int N) {
    int p = 1;
    while (p < 2 * (2 * N + 1)) p <<= 1;
    return p;
}

using Grid = std::vector<cd>;

// ---- elementwise grid arithmetic ----------------------------------------

inline Grid operator+(Grid a, const Grid& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}
inline Grid operator-(Grid a, const Grid& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] -= b[i];
    return a;
}
inline Grid operator*(Grid a, const Grid& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] *= b[i];
    return a;
}
inline Grid operator/(Grid a, const Grid& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] /= b[i];
    return a;
}
inline Grid operator*(cd s, Grid a) {
    for (auto& x : a) x *= s;
    return a;
}
inline Grid operator*(Grid a, cd s) { return s * std::move(a); }
inline Grid operator*(double s, Grid a) { return cd(s) * std::move(a); }
inline Grid operator/(Grid a, cd s) {
    for (auto& x : a) x /= s;
    return a;
}
inline Grid operator/(cd s, Grid a) {
    for (auto& x : a) x = s / x;
    return a;
}
inline Grid operator/(double s, Grid a) { return cd(s) / std::move(a); }
inline Grid operator+(Grid a, cd s) {
    for (auto& x : a) x += s;
    return a;
}
inline Grid operator+(cd s, Grid a) { return std::move(a) + s; }
inline Grid operator-(Grid a, cd s) { return std::move(a) + (-s); }
inline Grid operator-(cd s, Grid a) {
    for (auto& x : a) x = s - x;
    return a;
}
inline Grid operator-(Grid a) {
    for (auto& x : a) x = -x;
    return a;
}
inline Grid vexp(Grid a) {
    for (auto& x : a) x = std::exp(x);
    return a;
}

inline Grid unit_circle(int P) {
    Grid z(P);
    for (int j = 0; j < P; ++j) {
        double th = 2 * std::numbers::pi * j / P;
        z[j] = cd(std::cos(th), std::sin(th));
    }
    return z;
}

// Values of f on the dealiased circle grid: f(z_j) = sum_k c_k e^{2pi i jk/P}.
inline Grid grid(const Laurent& f) {
    const int P = grid_size(f.N);
    Grid buf(P);
    for (int k = -f.N; k <= f.N; ++k) buf[((k % P) + P) % P] += f.at(k);
    fft_inplace(buf, true);
    for (auto& x : buf) x *= double(P);
    return buf;
}

// Inverse of grid(): coefficients of the band [-N, N] from circle samples.
inline Laurent coeffs(Grid vals, int N) {
    const int P = int(vals.size());
    fft_inplace(vals, false);
    Laurent f(N);
    for (int k = -N; k <= N; ++k) f.at(k) = vals[((k % P) + P) % P] / double(P);
    return f;
}

// ---- series arithmetic ---------------------------------------------------

inline Laurent operator+(Laurent a, const Laurent& b) {
    for (std::size_t i = 0; i < a.c.size(); ++i) a.c[i] += b.c[i];
    return a;
}
inline Laurent operator-(Laurent a, const Laurent& b) {
    for (std::size_t i = 0; i < a.c.size(); ++i) a.c[i] -= b.c[i];
    return a;
}
inline Laurent operator*(cd s, Laurent a) {
    for (auto& x : a.c) x *= s;
    return a;
}
inline Laurent operator*(Laurent a, cd s) { return s * std::move(a); }
inline Laurent operator*(double s, Laurent a) { return cd(s) * std::move(a); }
inline Laurent operator-(Laurent a) {
    for (auto& x : a.c) x = -x;
    return a;
}

// Dealiased product: evaluate on the padded grid, truncate back to band.
inline Laurent mul(const Laurent& f, const Laurent& g) {
    return coeffs(grid(f) * grid(g), f.N);
}

inline Laurent series(int N, std::initializer_list<std::pair<int, cd>> terms) {
    Laurent f(N);
    for (auto& [k, v] : terms) f.at(k) = v;
    return f;
}

inline Laurent project(const Laurent& f, int lo, int hi) {
    Laurent out(f.N);
    for (int k = -f.N; k <= f.N; ++k)
        if (k >= lo && k <= hi) out.at(k) = f.at(k);
    return out;
}

inline Laurent z_deriv(const Laurent& f) {  // z d/dz
    Laurent out(f.N);
    for (int k = -f.N; k <= f.N; ++k) out.at(k) = double(k) * f.at(k);
    return out;
}

inline cd c0(const Laurent& f) { return f.at(0); }

inline double norm_inf(const Laurent& f) {
    double m = 0;
    for (auto& x : f.c) m = std::max(m, std::abs(x));
    return m;
}

inline double norm_inf(const Grid& v) {
    double m = 0;
    for (auto& x : v) m = std::max(m, std::abs(x));
    return m;
}

// Fraction of mass sitting in the outermost modes; large values flag
// truncation loss.
inline double tail_health(const Laurent& f) {
    double tail = 0, all = 0;
    for (int k = -f.N; k <= f.N; ++k) {
        double a = std::abs(f.at(k));
        all = std::max(all, a);
        if (std::abs(k) >= f.N - 2) tail = std::max(tail, a);
    }
    return all > 0 ? tail / all : 0.0;
}

// ---- winding and branch-controlled log/exp -------------------------------

inline double winding_of_values(const Grid& vals) {
    double total = 0, prev = std::arg(vals[0]);
    for (std::size_t j = 1; j <= vals.size(); ++j) {
        double ph = std::arg(vals[j % vals.size()]);
        double d = ph - prev;
        while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
        while (d < -std::numbers::pi) d += 2 * std::numbers::pi;
        total += d;
        prev = ph;
    }
    return total / (2 * std::numbers::pi);
}

inline constexpr double kNearZeroRel = 1e-8;

inline void check_nonvanishing(const Grid& vals) {
    double mn = std::numeric_limits<double>::max(), mx = 0;
    for (auto& x : vals) {
        mn = std::min(mn, std::abs(x));
        mx = std::max(mx, std::abs(x));
    }
    if (mx == 0 || mn < kNearZeroRel * mx) throw NearZeroOnCircle();
}

inline int winding_number(const Laurent& f) {
    Grid vals = grid(f);
    check_nonvanishing(vals);
    double w = winding_of_values(vals);
    long r = std::lround(w);
    if (std::abs(w - double(r)) > 1e-6) throw NearZeroOnCircle("winding not integral");
    return int(r);
}

struct CircleLog {
    Laurent log;  // g with exp(g(z)) z^w = f(z)
    int winding;
};

// Log of a nonvanishing curve of integer winding w, as g + w log z with
// g single-valued; Im of the mean coefficient normalized into (-pi, pi].
inline CircleLog circle_log(const Laurent& f) {
    Grid vals = grid(f);
    check_nonvanishing(vals);
    const int P = int(vals.size());
    double w = winding_of_values(vals);
    long wi = std::lround(w);
    if (std::abs(w - double(wi)) > 1e-6) throw NearZeroOnCircle("winding not integral");
    Grid g(P);
    double ph = std::arg(vals[0]), acc = ph;
    for (int j = 0; j < P; ++j) {
        if (j) {
            double p = std::arg(vals[j]);
            double d = p - ph;
            while (d > std::numbers::pi) d -= 2 * std::numbers::pi;
            while (d < -std::numbers::pi) d += 2 * std::numbers::pi;
            acc += d;
            ph = p;
        }
        double th = 2 * std::numbers::pi * j / P;
        g[j] = cd(std::log(std::abs(vals[j])), acc - double(wi) * th);
    }
    Laurent gc = coeffs(g, f.N);
    double im = gc.at(0).imag();
    double shift = std::floor((im + std::numbers::pi) / (2 * std::numbers::pi));
    gc.at(0) -= cd(0, 2 * std::numbers::pi * shift);
    return {gc, int(wi)};
}

inline Laurent circle_exp(const Laurent& f) { return coeffs(vexp(grid(f)), f.N); }

}  // namespace toda
