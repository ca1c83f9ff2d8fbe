#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

namespace ifp {

inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.39894228040143267794;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

inline double norm_cdf(double x) {
    return 0.5 * std::erfc(-x * 0.70710678118654752440);
}

// Survival function of the standard normal, accurate in the far tail.
inline double norm_sf(double x) {
    return 0.5 * std::erfc(x * 0.70710678118654752440);
}

// Adaptive Simpson quadrature with absolute tolerance.
double simpson_adaptive(const std::function<double(double)>& f,
                        double a, double b, double abs_tol, int max_depth = 40);

// FNV-1a 64-bit hash, used for config fingerprints in manifests.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// splitmix64; used to derive per-chunk RNG streams from (seed, chunk).
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

} // namespace ifp
