#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "svc/errors.hpp"

namespace svc::detail {

inline bool is_pow2(int64_t n) { return n > 0 && (n & (n - 1)) == 0; }

// Iterative radix-2 Cooley-Tukey, in place. Size must be a power of two;
// the spectral distances only ever ask for 512/1024/2048.
inline void fft_inplace(std::vector<std::complex<double>>& a) {
    const size_t n = a.size();
    if (!is_pow2(static_cast<int64_t>(n))) {
        throw ArgumentError("fft size must be a power of two, got " +
                            std::to_string(n));
    }
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = -2.0 * 3.14159265358979323846 / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

}  // namespace svc::detail
