#pragma once

#include <span>
#include <vector>

#include "ifp/errors.hpp"

namespace ifp {

// Thomas algorithm for a tridiagonal system. `lower[0]` and
// `upper[n-1]` are ignored. Overwrites rhs with the solution.
inline void solve_tridiag(std::span<const double> lower,
                          std::span<const double> diag,
                          std::span<const double> upper,
                          std::span<double> rhs,
                          std::vector<double>& scratch) {
    const std::size_t n = diag.size();
    scratch.resize(n);
    double piv = diag[0];
    if (piv == 0.0) throw SolverError(Errc::invalid_argument, "singular tridiagonal pivot at row 0");
    rhs[0] /= piv;
    for (std::size_t i = 1; i < n; ++i) {
        scratch[i] = upper[i - 1] / piv;
        piv = diag[i] - lower[i] * scratch[i];
        if (piv == 0.0) throw SolverError(Errc::invalid_argument, "singular tridiagonal pivot");
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;)
        rhs[i] -= scratch[i + 1] * rhs[i + 1];
}

} // namespace ifp
