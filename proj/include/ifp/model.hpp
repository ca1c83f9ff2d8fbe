#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ifp/errors.hpp"

namespace ifp {

using CoeffFn = std::function<double(double, double)>; // (x, t)

constexpr double kMinusInf = -std::numeric_limits<double>::infinity();

/// Initial law of the diffusion. Three representations: a point mass,
/// a tabulated density, or a closed-form density.
struct InitialDensity {
    enum class Kind { delta, tabulated, analytic };

    Kind kind = Kind::delta;
    double delta_x0 = 0.0;
    std::vector<double> knots, values;          // tabulated
    std::function<double(double)> fn;           // analytic
    double support_floor = 0.0;                 // lowest point of support
    double support_ceiling = 0.0;               // where the density is negligible

    static InitialDensity delta(double x0);
    static InitialDensity tabulated(std::vector<double> x, std::vector<double> v);
    static InitialDensity analytic(std::function<double(double)> f,
                                   double floor, double ceiling);

    bool is_delta() const { return kind == Kind::delta; }
    double operator()(double x) const;          // density value; throws for delta
    double tail_mass(double x) const;           // integral over (x, inf)
    void validate() const;                      // values >= 0, total mass 1 (1e-8)
};

/// Process definition: drift, volatility, initial law, and the spatial
/// interval the solvers should cover.
struct DiffusionSpec {
    CoeffFn mu;
    CoeffFn sigma;
    InitialDensity initial_density;
    double x_lo_hint = -8.0, x_hi_hint = 8.0;   // truncation hint

    double sigma_floor = 1e-8;                  // declared lower bound for sigma

    void validate(double t_max) const;          // sigma >= floor, coefficients finite
};

/// Sampled survival probability with derivative. Admissible curves have
/// p(0)=1, p nonincreasing and p(T)>0; validate_p0 enforces this.
class SurvivalCurve {
public:
    SurvivalCurve() = default;

    double p(double t) const;
    double pdot(double t) const;
    double pddot0() const;                      // second derivative at 0, divided differences
    double sup_abs_pdot() const;                // penalty magnitude m

    bool strict_decrease() const { return strict_decrease_; }
    int interp_order() const { return order_; }
    double t_front() const { return t_.front(); }
    double t_back() const { return t_.back(); }
    std::span<const double> knots() const { return t_; }
    std::span<const double> p_values() const { return p_; }
    std::span<const double> pdot_values() const { return pd_; }

    /// p^h(t) = p(t) - h*t, pdot^h = pdot - h; throws P0Violation when the
    /// shifted curve leaves the admissible class on [0, t_back].
    SurvivalCurve perturbed(double h) const;

    friend SurvivalCurve validate_p0(std::span<const double> t, std::span<const double> p,
                                     std::span<const double> pdot, int order);

private:
    std::vector<double> t_, p_, pd_;
    int order_ = 3;
    bool strict_decrease_ = false;

    int segment(double t) const;
};

/// Builds a validated curve. pdot may be empty, in which case knot
/// derivatives come from monotone cubic interpolation. order in {1,3}.
SurvivalCurve validate_p0(std::span<const double> t, std::span<const double> p,
                          std::span<const double> pdot = {}, int order = 3);

/// Discrete slope floor inf (p(s)-p(t))/(t-s) over knot pairs in [T1,T2].
double slope_floor(const SurvivalCurve& curve, double T1, double T2);

/// Time-sampled barrier. Values live in R union {-inf}; -inf is the
/// explicit sentinel for an inactive constraint, never a large negative
/// float. Duplicate time knots represent jumps.
struct Boundary {
    std::vector<double> t, b;

    bool finite_at(std::size_t i) const { return std::isfinite(b[i]); }
    bool all_infinite() const;

    /// Interpolated value; linear on finite segments. A segment with one
    /// infinite endpoint carries the finite endpoint value on its interior
    /// (the jump is resolved at knot resolution), and -inf when both ends
    /// are infinite.
    double operator()(double tq) const;

    double max_finite() const;
    double min_finite() const;
};

/// Discrete upper-semi-continuous envelope: each knot takes the max of its
/// own value and the one-sided limits from adjacent knots. Idempotent.
Boundary usc_envelope(const Boundary& in);

/// Coordinate change that normalizes the volatility to sqrt(2).
/// to_y is the forward map, to_x its inverse; reduced.mu is the
/// transformed drift and reduced.sigma is identically sqrt(2).
struct ReducedSpec {
    DiffusionSpec reduced;
    std::function<double(double, double)> to_y;  // (x,t) -> y
    std::function<double(double, double)> to_x;  // (y,t) -> x
    bool identity = false;                       // sigma was already sqrt(2)
    double t_max = 1.0;

    Boundary map_boundary(const Boundary& b) const;      // y = to_y(b(t), t)
    Boundary unmap_boundary(const Boundary& b) const;    // x = to_x(b(t), t)
};

/// Volatility reduction. Quadrature target 1e-8 for the forward map;
/// the inverse map is found by monotone root-finding to 1e-10.
ReducedSpec sigma_reduce(const DiffusionSpec& spec, double t_max);

struct CompatResidual {
    int order;              // 1 or 2
    std::string frame;      // "reduced" or "original"
    double value;
};

/// Corner compatibility residuals between the initial density and the
/// survival curve at t=0. Order 1: 2*pdot(0) + sigma^2(0,0)*u0'(0+).
/// Order 2 uses the second corner relation with bdot(0)=u0''(0)/pdot(0).
std::vector<CompatResidual> compatibility_residuals(const InitialDensity& u0,
                                                    const SurvivalCurve& curve,
                                                    const ReducedSpec& spec,
                                                    int order);

} // namespace ifp
