#pragma once

#include <optional>
#include <string>
#include <vector>

#include "ifp/forward.hpp"
#include "ifp/grid.hpp"
#include "ifp/inverse.hpp"
#include "ifp/model.hpp"

namespace ifp {

struct Metric {
    std::string name;
    double value = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    bool skipped = false;
    std::string note;
};

struct MetricSeries {
    std::string name;
    std::vector<double> t;
    std::vector<double> value;
};

struct DiagnosticReport {
    std::string provenance; // config hash of the producing run
    std::vector<Metric> metrics;
    std::vector<MetricSeries> series;

    void add(Metric m) { metrics.push_back(std::move(m)); }
    bool all_pass() const {
        for (const auto& m : metrics)
            if (!m.skipped && !m.pass) return false;
        return true;
    }
};

struct FbResidualSeries {
    MetricSeries absolute; // sigma^2 u_x(b+) + 2 pdot
    MetricSeries relative; // divided by |2 pdot|
    bool skipped = false;  // no finite-boundary knots
    double median_relative(double t_lo, double t_hi) const;
};

/// Free-boundary residual r(t) = sigma^2 u_x(b(t)+,t) + 2 pdot(t) on every
/// slice with a finite barrier. The one-sided derivative uses a 3-point
/// stencil anchored at the first node strictly above b + anchor_offset,
/// evaluated at the barrier via the quadratic fit. A negative offset picks
/// the default 2.5*dx, which clears both the clamped cell and the 2-3 cell
/// corner smear of the discrete solution.
FbResidualSeries fb_residual(const Field& u, const Boundary& b,
                             const SurvivalCurve& curve, const ReducedSpec& spec,
                             double anchor_offset = -1.0);

struct WeakBoundsAtTime {
    double t = 0.0;
    std::vector<double> delta, inf_ratio, sup_ratio;
    double target = 0.0; // -2 pdot(t)
    bool straddle = false; // inf <= target <= sup at the smallest delta
};

/// Weak form of the boundary condition: over shrinking parabolic
/// neighborhoods of (b(t),t), inf and sup of sigma^2 u(x,s)/(x - l(s))
/// with l the piecewise-linear interpolant of b must straddle -2 pdot(t).
std::vector<WeakBoundsAtTime> weak_fb_bounds(const Field& u, const Boundary& b,
                                             const SurvivalCurve& curve,
                                             std::span<const double> deltas,
                                             std::span<const double> times);

struct HolderEstimate {
    double alpha = 0.0;     // capped at 1
    double stderr_ = 0.0;
    int lags = 0;
};

/// Log-log regression of the lag modulus sup_t |b(t+tau)-b(t)| against tau.
HolderEstimate holder_estimate(const Boundary& b, double t_lo, double t_hi,
                               double lag_lo, double lag_hi, int n_lags = 16);

/// Sign alternation count of the discrete x-derivative of v right of the
/// barrier, per slice. The dead-band is relative to the slice's largest
/// |dv/dx| so the count is invariant under positive scaling of v.
MetricSeries sign_changes(const Field& v, const Boundary& b,
                          double deadband = 1e-10);

struct RoundTripOptions {
    PenaltyConfig penalty;
    McOptions mc;
    bool run_mc = true;
    double window_lo = 0.1;     // interior window for residual metrics
    double tol_roundtrip_pde = 2e-2;
    double tol_fb_median = 5e-2;
    double tol_holder = 0.45;
    std::vector<double> deltas; // weak-bound radii; default multiples of dx
    int weak_times = 8;
};

struct RoundTripResult {
    InverseSolution inverse;
    ForwardResult pde;
    std::optional<ForwardResult> mc;
    double err_pde = 0.0;
    double err_mc = 0.0;
    FbResidualSeries fb;
    std::vector<WeakBoundsAtTime> weak;
    std::optional<HolderEstimate> holder;
    DiagnosticReport report;
};

/// Full pipeline: penalized continuation, boundary extraction, forward
/// verification by both methods, and the regularity diagnostics.
RoundTripResult round_trip(const SurvivalCurve& curve, const DiffusionSpec& spec,
                           const ReducedSpec& reduced, const SpaceTimeGrid& grid,
                           const RoundTripOptions& opt);

} // namespace ifp
