#pragma once

#include <cassert>
#include <complex>
#include <numbers>
#include <vector>

namespace toda {

using cd = std::complex<double>;

// In-place iterative radix-2 FFT. Sizes are always powers of two here
// (dealiasing grid and the x-grid), so no mixed-radix support is needed.
inline void fft_inplace(std::vector<cd>& a, bool inverse) {
    const std::size_t n = a.size();
    assert(n && (n & (n - 1)) == 0 && "fft size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = 2 * std::numbers::pi / double(len) * (inverse ? 1 : -1);
        const cd wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            cd w(1);
            for (std::size_t k = 0; k < len / 2; ++k) {
                cd t = a[i + k + len / 2] * w;
                a[i + k + len / 2] = a[i + k] - t;
                a[i + k] += t;
                w *= wl;
            }
        }
    }
    if (inverse)
        for (auto& x : a) x /= double(n);
}

inline std::vector<cd> fft(std::vector<cd> a) {
    fft_inplace(a, false);
    return a;
}

inline std::vector<cd> ifft(std::vector<cd> a) {
    fft_inplace(a, true);
    return a;
}

}  // namespace toda
