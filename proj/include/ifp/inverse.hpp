#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ifp/grid.hpp"
#include "ifp/model.hpp"

namespace ifp {

/// Penalty-scheme configuration. The reaction term is
/// beta(z) = m * max(0, z)^3 with m = sup|pdot| unless overridden.
struct PenaltyConfig {
    std::vector<double> eps_schedule;   // strictly decreasing, positive
    double m = 0.0;                     // 0: take sup|pdot| from the curve
    double newton_tol = 1e-10;
    int max_newton = 50;
    double cont_tol = 1e-3;             // continuation stop on ||w_k - w_{k+1}||_inf
    double bounds_slack = 1e-8;
    std::optional<double> theta;        // extraction threshold override

    /// geometric schedule eps0 * ratio^-k, clipped to end at eps_min
    static PenaltyConfig with_schedule(double eps0 = 1e-1, double ratio = 4.0,
                                       double eps_min = 1e-1 * std::pow(4.0, -5));
    void validate() const;
};

struct LevelReport {
    double eps = 0.0;
    int newton_total = 0;
    int newton_worst_slice = 0;
    double worst_residual = 0.0;
    double diff_prev = 0.0;             // sup |w_k - w_{k-1}|
};

struct ConvergenceReport {
    std::vector<LevelReport> levels;
    bool converged = false;             // continuation stop rule fired
    bool schedule_exhausted = false;    // ran out of levels before the stop rule
    double m = 0.0;
    double theta = 0.0;
};

struct InverseSolution {
    Field w;            // survival distribution
    Field u;            // survival density, -dw/dx
    Boundary b;         // extracted viscosity boundary
    double eps_final = 0.0;
    ConvergenceReport report;
};

/// Barrier-free survival distribution w0(x,t) = P(X_t > x), computed with
/// the same discrete operator as the penalized solve so comparison bounds
/// hold nodewise. Throws TruncationTooTight when w0 at the left edge
/// drops below 1 - 1e-8.
Field baseline_distribution(const ReducedSpec& spec, const SpaceTimeGrid& grid);

/// One penalized solve at fixed eps: implicit diffusion plus damped Newton
/// on the cubic penalty per time slice. `warm` (same shape) seeds the
/// Newton iteration when given.
Field solve_penalized(const SurvivalCurve& curve, const ReducedSpec& spec,
                      const SpaceTimeGrid& grid, double eps,
                      const PenaltyConfig& cfg, const Field& baseline,
                      const Field* warm = nullptr, LevelReport* report = nullptr);

/// Runs the eps schedule with warm starts and extracts the boundary from
/// the last iterate.
InverseSolution epsilon_continuation(const SurvivalCurve& curve, const ReducedSpec& spec,
                                     const SpaceTimeGrid& grid, const PenaltyConfig& cfg);

/// Viscosity-boundary extraction b(t) = inf { x : w(x,t) < p(t) }.
/// A slice whose maximum stays strictly below p(t) has an inactive
/// constraint and yields -inf. Otherwise the crossing of the threshold
/// level p - theta is located with linear sub-cell refinement and the
/// quadratic contact behaviour of w - p is extrapolated back to zero
/// offset using the crossing of p - 4*theta.
Boundary extract_boundary(const Field& w, const SurvivalCurve& curve, double theta);

/// Discrete penalty residual -L_h(w - w0) per node (time-slice rows; the
/// initial slice is zero by construction). Used by the invariant checks:
/// values must sit in [0, m] up to solver tolerance.
Field penalty_residual(const Field& w, const Field& baseline,
                       const ReducedSpec& spec, const SpaceTimeGrid& grid);

} // namespace ifp
