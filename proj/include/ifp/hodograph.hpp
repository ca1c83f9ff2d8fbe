#pragma once

#include <span>
#include <string>
#include <vector>

#include "ifp/grid.hpp"
#include "ifp/model.hpp"

namespace ifp {

/// Positive scaling field K: solves the density-form equation with
/// initial data identically one and no barrier. Dividing the survival
/// density by K yields a function governed by an operator that
/// annihilates constants. Throws PositivityLoss when K touches zero.
Field solve_scaling(const ReducedSpec& spec, const SpaceTimeGrid& grid);

struct ScaledDensity {
    Field v;          // u / K
    Field scaling;    // K
    Field eff_drift;  // nu = mu - 2 K_x / K
};

ScaledDensity scaled_density(const Field& u, Field K, const ReducedSpec& spec);

/// Function on the (z,t) strip [0, z_eps] x window with stored
/// z-derivative samples. Time-major layout like Field.
struct HodographField {
    std::vector<double> z;
    std::vector<double> t;
    std::vector<double> val;
    std::vector<double> dz;

    int nz() const { return int(z.size()) - 1; }
    int nt() const { return int(t.size()) - 1; }
    double z_eps() const { return z.back(); }
    double at(int zi, int ti) const { return val[std::size_t(ti) * z.size() + zi]; }
    double& at(int zi, int ti) { return val[std::size_t(ti) * z.size() + zi]; }
    double dz_at(int zi, int ti) const { return dz[std::size_t(ti) * z.size() + zi]; }
    double& dz_at(int zi, int ti) { return dz[std::size_t(ti) * z.size() + zi]; }

    std::span<const double> row(int ti) const {
        return {val.data() + std::size_t(ti) * z.size(), z.size()};
    }
};

/// Strip ceiling: half of the best maximin of v over horizontal segments
/// x = const that stay above the barrier on the whole window. Guarantees
/// every level z <= z_eps is reached on every window slice.
double choose_z_eps(const Field& v, const Boundary& barrier,
                    int n_lo, int n_hi);

/// Level-set inversion X(z,t) = min { x >= b(t) : v(x,t) = z } per window
/// slice, first upward crossing with linear sub-cell refinement;
/// X(0,t) = b(t). Throws LevelNotReached when a slice never attains z.
HodographField invert_level_sets(const Field& v, const Boundary& barrier,
                                 double z_eps, int nz, int n_lo, int n_hi);

struct QuasiOptions {
    double newton_tol = 1e-10;
    int max_newton = 200;
    double band_slack = 1e-6; // relative slack on the gradient band
    bool enforce_band = true;
};

/// Comparison constants for the a-priori gradient band
///   m e^{-int k} <= Y_z <= M e^{+int k},  k(t) = sup_x |nu_x(x,t)|.
struct BandConstants {
    double M1 = 0, m1 = 0; // sup K / min|pdot|, inf K / max|pdot|
    double M2 = 0, m2 = 0; // extremes of the initial profile derivative
    double M3 = 0, m3 = 0; // extremes of the right-edge Neumann data
    double M = 0, m = 0;
    std::vector<double> k_integral; // cumulative from the window start
    double lower_at(int ti) const { return m * std::exp(-k_integral[ti]); }
    double upper_at(int ti) const { return M * std::exp(k_integral[ti]); }
};

/// Quasilinear solve of Y_t = Y_z^{-2} Y_zz + nu(Y,t) on the strip.
/// Left boundary enforces pdot(t) Y_z(0,t) + K(Y(0,t),t) = 0 through a
/// ghost node, right boundary matches the supplied Neumann data, and the
/// slice systems go through damped Newton with the full quasilinear
/// Jacobian. Every accepted step is checked against the gradient band.
HodographField solve_quasilinear(std::span<const double> x0_profile,
                                 const SurvivalCurve& curve,
                                 const Field& K, const Field& nu,
                                 std::span<const double> neumann,
                                 std::span<const double> z_knots,
                                 std::span<const double> t_knots,
                                 const QuasiOptions& opt = {},
                                 BandConstants* band_out = nullptr);

/// Same solver for the perturbed family: initial profile shifted by h and
/// curve replaced by p - h*t (throws P0Violation when h is too large).
HodographField solve_perturbed(double h,
                               std::span<const double> x0_profile,
                               const SurvivalCurve& curve,
                               const Field& K, const Field& nu,
                               std::span<const double> neumann,
                               std::span<const double> z_knots,
                               std::span<const double> t_knots,
                               const QuasiOptions& opt = {},
                               BandConstants* band_out = nullptr);

struct BracketReport {
    std::vector<double> t;
    std::vector<double> lo_edge0, boundary, hi_edge0;  // at z = 0
    std::vector<double> lo_edgeE, level_edge, hi_edgeE; // at z = z_eps
    int violations_boundary = 0;
    int violations_edge = 0;
    double min_margin_boundary = 0.0;
    double min_margin_edge = 0.0;
    bool nonstrict = false; // some margin is exactly zero (h = 0 case)
    bool all_strict() const { return violations_boundary + violations_edge == 0 && !nonstrict; }
};

/// Checks Y^-h(0,.) < b < Y^h(0,.) and Y^-h(z_eps,.) < X(z_eps,.) <
/// Y^h(z_eps,.) per knot; report only, never throws on violations.
BracketReport bracket_validate(std::span<const double> b_window,
                               std::span<const double> x_edge,
                               const HodographField& up,
                               const HodographField& down);

} // namespace ifp
