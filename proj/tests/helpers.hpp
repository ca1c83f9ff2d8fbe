#pragma once

// Shared fixtures for the unit suites.

#include <cmath>
#include <vector>

#include "ifp/model.hpp"

namespace ifp::test {

inline DiffusionSpec brownian_spec(double vol, double drift, InitialDensity u0,
                                   double lo = -8.0, double hi = 8.0) {
    DiffusionSpec s;
    s.mu = [drift](double, double) { return drift; };
    s.sigma = [vol](double, double) { return vol; };
    s.initial_density = std::move(u0);
    s.x_lo_hint = lo;
    s.x_hi_hint = hi;
    s.sigma_floor = 0.5 * vol;
    return s;
}

// p(t) = exp(-lambda t) sampled with exact derivative values.
inline SurvivalCurve exp_curve(double lambda, double T, int n) {
    std::vector<double> t(n + 1), p(n + 1), pd(n + 1);
    for (int i = 0; i <= n; ++i) {
        t[i] = T * i / n;
        p[i] = std::exp(-lambda * t[i]);
        pd[i] = -lambda * p[i];
    }
    return validate_p0(t, p, pd, 3);
}

inline SurvivalCurve flat_curve(double T, int n) {
    std::vector<double> t(n + 1), p(n + 1, 1.0), pd(n + 1, 0.0);
    for (int i = 0; i <= n; ++i) t[i] = T * i / n;
    return validate_p0(t, p, pd, 1);
}

// density x*exp(-x) on x >= 0 (unit mass, u0'(0+) = 1)
inline InitialDensity xexp_density(double ceiling = 40.0) {
    return InitialDensity::analytic([](double x) { return x * std::exp(-x); }, 0.0, ceiling);
}

// bell density x^2/2 * exp(-x) on x >= 0 (unit mass, single interior peak)
inline InitialDensity bell_density(double ceiling = 45.0) {
    return InitialDensity::analytic([](double x) { return 0.5 * x * x * std::exp(-x); }, 0.0, ceiling);
}

inline Boundary const_boundary(double level, double t0, double t1, int n = 8) {
    Boundary b;
    for (int i = 0; i <= n; ++i) {
        b.t.push_back(t0 + (t1 - t0) * i / n);
        b.b.push_back(level);
    }
    return b;
}

inline Boundary inf_boundary(double t0, double t1, int n = 8) {
    return const_boundary(kMinusInf, t0, t1, n);
}

} // namespace ifp::test
