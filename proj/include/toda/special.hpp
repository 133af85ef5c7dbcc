#pragma once

#include <complex>

#include "errors.hpp"
#include "laurent.hpp"

namespace toda {

// Ein(x) = -sum_{n>=1} (-x)^n / (n! n), entire; x Ein'(x) = 1 - e^{-x}.
inline cd ein(cd x) {
    if (std::abs(x) > 40.0) throw OutOfDomain("ein argument outside supported range");
    cd s = 0, t = 1;
    for (int n = 1; n < 400; ++n) {
        t *= -x / double(n);
        s -= t / double(n);
        if (std::abs(t) < 1e-18 * (std::abs(s) + 1)) break;
    }
    return s;
}

inline Grid ein(Grid a) {
    for (auto& x : a) x = ein(x);
    return a;
}

// Harmonic numbers c_p = 1 + 1/2 + ... + 1/p with c_0 = c_{-1} = 0.
inline double harmonic(int p) {
    if (p < -1) throw OutOfDomain("harmonic number undefined for p < -1");
    double s = 0;
    for (int k = 1; k <= p; ++k) s += 1.0 / k;
    return s;
}

inline double factorial(int n) {
    double r = 1;
    for (int k = 2; k <= n; ++k) r *= k;
    return r;
}

inline double double_factorial(int n) {  // n!! with 0!! = (-1)!! = 1
    double r = 1;
    for (int k = n; k > 1; k -= 2) r *= k;
    return r;
}

}  // namespace toda
