#pragma once

#include <optional>
#include <span>
#include <vector>

#include "ifp/grid.hpp"
#include "ifp/model.hpp"

namespace ifp::detail {

/// One time step of the density operator in flux-divergence form,
///
///   du/dt = d/dx( du/dx - m(x,t) u ),
///
/// on a uniform grid with zero-flux outer edges, so the interior scheme
/// telescopes and conserves sum(u)*dx exactly when no barrier is active.
/// An absorbing barrier clamps every node at or below it to zero; the
/// first node above gets a shortened left arm so the Dirichlet point
/// sits on the barrier itself (first-order sub-cell placement).
class DensityStepper {
public:
    DensityStepper(const SpaceTimeGrid& g, CoeffFn drift);

    /// theta = 1: implicit Euler; theta = 0.5: Crank-Nicolson.
    /// Barriers are -inf when inactive. un and un1 may alias.
    void step(std::span<const double> un, std::span<double> un1,
              double t_n, double t_n1, double b_n, double b_n1, double theta);

private:
    struct Rows {
        std::vector<double> lo, di, up; // tridiagonal of the spatial operator
        int first_active = 0;           // nodes below stay clamped
    };

    void drift_at(double t, std::vector<double>& mid, std::vector<double>& node);
    Rows assemble(double t, double barrier);

    SpaceTimeGrid grid_;
    CoeffFn drift_;
    bool has_drift_;

    // per-time drift cache; stepping revisits each slice time twice
    double cache_t_ = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> cache_mid_, cache_node_;
    double cache2_t_ = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> cache2_mid_, cache2_node_;

    std::vector<double> work_lo_, work_di_, work_up_, work_rhs_, scratch_;
};

} // namespace ifp::detail
