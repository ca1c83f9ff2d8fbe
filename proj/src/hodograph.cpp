#include "ifp/hodograph.hpp"

#include <algorithm>
#include <cmath>

#include "ifp/parabolic.hpp"
#include "ifp/tridiag.hpp"

namespace ifp {

Field solve_scaling(const ReducedSpec& spec, const SpaceTimeGrid& grid) {
    Field K(grid, FieldKind::scaling);
    auto first = K.slice(0);
    std::fill(first.begin(), first.end(), 1.0);

    detail::DensityStepper stepper(grid, spec.reduced.mu);
    for (int n = 0; n < grid.nt; ++n)
        stepper.step(K.slice(n), K.slice(n + 1), grid.t(n), grid.t(n + 1),
                     kMinusInf, kMinusInf, 0.5);

    double kmin = K.min();
    if (kmin <= 0.0)
        throw SolverError(Errc::positivity_loss,
                          "scaling field min " + std::to_string(kmin)
                          + " (grid too coarse for the drift)");
    K.check_finite();
    return K;
}

ScaledDensity scaled_density(const Field& u, Field K, const ReducedSpec& spec) {
    const SpaceTimeGrid& g = u.grid();
    if (!g.same_shape(K.grid()))
        throw SolverError(Errc::invalid_argument, "u and K grids differ");
    if (K.min() <= 0.0)
        throw SolverError(Errc::positivity_loss, "scaling field not positive");

    Field v(g, FieldKind::scaled_density);
    for (int n = 0; n <= g.nt; ++n)
        for (int j = 0; j <= g.nx; ++j)
            v.at(j, n) = u.at(j, n) / K.at(j, n);

    Field kx = fd_derivative(K, Axis::x, 1, StencilSide::central);
    Field nu(g, FieldKind::other);
    const bool has_mu = static_cast<bool>(spec.reduced.mu);
    for (int n = 0; n <= g.nt; ++n)
        for (int j = 0; j <= g.nx; ++j) {
            double mu = has_mu ? spec.reduced.mu(g.x(j), g.t(n)) : 0.0;
            nu.at(j, n) = mu - 2.0 * kx.at(j, n) / K.at(j, n);
        }
    nu.check_finite();
    return ScaledDensity{std::move(v), std::move(K), std::move(nu)};
}

double choose_z_eps(const Field& v, const Boundary& barrier, int n_lo, int n_hi) {
    const SpaceTimeGrid& g = v.grid();
    if (n_lo < 0 || n_hi > g.nt || n_lo >= n_hi)
        throw SolverError(Errc::invalid_argument, "bad window indices");
    double b_top = kMinusInf;
    for (int n = n_lo; n <= n_hi; ++n) {
        double b = barrier(g.t(n));
        if (std::isfinite(b)) b_top = std::max(b_top, b);
        else throw SolverError(Errc::invalid_argument,
                               "barrier must be finite on the hodograph window");
    }
    double best = 0.0;
    for (int j = 0; j <= g.nx; ++j) {
        if (g.x(j) <= b_top) continue; // segment must stay above the barrier
        double lo = std::numeric_limits<double>::infinity();
        for (int n = n_lo; n <= n_hi; ++n)
            lo = std::min(lo, v.at(j, n));
        best = std::max(best, lo);
    }
    if (!(best > 0))
        throw SolverError(Errc::level_not_reached,
                          "no horizontal segment with positive scaled density on the window");
    return 0.5 * best;
}

HodographField invert_level_sets(const Field& v, const Boundary& barrier,
                                 double z_eps, int nz, int n_lo, int n_hi) {
    const SpaceTimeGrid& g = v.grid();
    if (nz < 8)
        throw SolverError(Errc::invalid_argument, "need at least 8 z-cells");
    if (n_lo < 0 || n_hi > g.nt || n_lo >= n_hi)
        throw SolverError(Errc::invalid_argument, "bad window indices");

    HodographField X;
    X.z.resize(nz + 1);
    for (int i = 0; i <= nz; ++i) X.z[i] = z_eps * i / nz;
    X.t.resize(n_hi - n_lo + 1);
    for (int n = n_lo; n <= n_hi; ++n) X.t[n - n_lo] = g.t(n);
    X.val.assign(X.z.size() * X.t.size(), 0.0);
    X.dz.assign(X.z.size() * X.t.size(), 0.0);

    for (int n = n_lo; n <= n_hi; ++n) {
        const int ti = n - n_lo;
        const double t = g.t(n);
        double b = barrier(t);
        if (!std::isfinite(b))
            throw SolverError(Errc::invalid_argument,
                              "barrier must be finite on the hodograph window");
        X.at(0, ti) = b;
        auto slice = v.slice(n);
        int j = std::max(0, g.floor_index(b) + 1); // first node right of b
        double x_prev = b, v_prev = 0.0;
        for (int zi = 1; zi <= nz; ++zi) {
            const double z = X.z[zi];
            while (j <= g.nx && slice[j] < z) {
                x_prev = g.x(j);
                v_prev = slice[j];
                ++j;
            }
            if (j > g.nx)
                throw SolverError(Errc::level_not_reached,
                                  "level z=" + std::to_string(z) + " not reached at t="
                                  + std::to_string(t) + " (z_eps too large)");
            double xj = g.x(j), vj = slice[j];
            double x = (vj > v_prev)
                           ? x_prev + (z - v_prev) / (vj - v_prev) * (xj - x_prev)
                           : xj;
            X.at(zi, ti) = x;
        }
        // strict monotonicity inside the strip
        for (int zi = 1; zi <= nz; ++zi)
            if (!(X.at(zi, ti) > X.at(zi - 1, ti)))
                throw SolverError(Errc::level_not_reached,
                                  "level curves not strictly increasing at t=" + std::to_string(t));
        const double dzh = z_eps / nz;
        X.dz_at(0, ti) = (X.at(1, ti) - X.at(0, ti)) / dzh;
        for (int zi = 1; zi < nz; ++zi)
            X.dz_at(zi, ti) = (X.at(zi + 1, ti) - X.at(zi - 1, ti)) / (2 * dzh);
        X.dz_at(nz, ti) = (X.at(nz, ti) - X.at(nz - 1, ti)) / dzh;
    }
    return X;
}

namespace {

struct QuasiContext {
    const Field* K = nullptr;
    const Field* nu = nullptr;
    const Field* kx = nullptr;
    const Field* nux = nullptr;
    bool flat_scaling = false; // K identically one, nu identically zero
};

BandConstants make_band(const QuasiContext& ctx, const SurvivalCurve& curve,
                        std::span<const double> x0_profile,
                        std::span<const double> neumann,
                        std::span<const double> z_knots,
                        std::span<const double> t_knots) {
    BandConstants b;
    double pd_min = std::numeric_limits<double>::infinity(); // min |pdot|
    double pd_max = 0.0;
    for (double t : t_knots) {
        double pd = std::abs(curve.pdot(t));
        pd_min = std::min(pd_min, pd);
        pd_max = std::max(pd_max, pd);
    }
    double kmax = ctx.flat_scaling ? 1.0 : ctx.K->max();
    double kmin = ctx.flat_scaling ? 1.0 : ctx.K->min();
    b.M1 = kmax / pd_min;
    b.m1 = kmin / pd_max;

    const double dz = z_knots[1] - z_knots[0];
    b.M2 = 0.0;
    b.m2 = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < x0_profile.size(); ++i) {
        double d = (x0_profile[i + 1] - x0_profile[i]) / dz;
        b.M2 = std::max(b.M2, d);
        b.m2 = std::min(b.m2, d);
    }
    b.M3 = *std::max_element(neumann.begin(), neumann.end());
    b.m3 = *std::min_element(neumann.begin(), neumann.end());
    b.M = std::max({b.M1, b.M2, b.M3});
    b.m = std::min({b.m1, b.m2, b.m3});

    b.k_integral.assign(t_knots.size(), 0.0);
    if (!ctx.flat_scaling) {
        const SpaceTimeGrid& g = ctx.nux->grid();
        auto slice_sup = [&](double t) {
            int n = std::clamp(int(std::lround((t - g.t0) / g.dt())), 0, g.nt);
            double s = 0.0;
            for (int j = 0; j <= g.nx; ++j)
                s = std::max(s, std::abs(ctx.nux->at(j, n)));
            return s;
        };
        double prev = slice_sup(t_knots[0]);
        for (std::size_t i = 1; i < t_knots.size(); ++i) {
            double curv = slice_sup(t_knots[i]);
            b.k_integral[i] = b.k_integral[i - 1]
                            + 0.5 * (prev + curv) * (t_knots[i] - t_knots[i - 1]);
            prev = curv;
        }
    }
    return b;
}

HodographField quasilinear_impl(std::span<const double> x0_profile,
                                const SurvivalCurve& curve,
                                const Field& K, const Field& nu,
                                std::span<const double> neumann,
                                std::span<const double> z_knots,
                                std::span<const double> t_knots,
                                const QuasiOptions& opt,
                                BandConstants* band_out) {
    const int nzn = int(z_knots.size());
    const int ntn = int(t_knots.size());
    if (nzn < 3 || ntn < 2)
        throw SolverError(Errc::invalid_argument, "strip too small");
    if (int(x0_profile.size()) != nzn || int(neumann.size()) != ntn)
        throw SolverError(Errc::invalid_argument, "profile/neumann size mismatch");
    const double dz = z_knots[1] - z_knots[0];

    for (std::size_t i = 0; i + 1 < x0_profile.size(); ++i)
        if (!(x0_profile[i + 1] > x0_profile[i]))
            throw SolverError(Errc::invalid_argument, "initial profile must strictly increase");
    for (double gv : neumann)
        if (!(gv > 0))
            throw SolverError(Errc::invalid_argument, "Neumann data must be positive");
    for (double t : t_knots)
        if (!(curve.pdot(t) < 0))
            throw SolverError(Errc::degenerate_slope,
                              "pdot must be negative on the hodograph window");

    QuasiContext ctx;
    ctx.K = &K;
    ctx.nu = &nu;
    ctx.flat_scaling = (std::abs(K.min() - 1.0) < 1e-10 && std::abs(K.max() - 1.0) < 1e-10
                        && std::abs(nu.min()) < 1e-10 && std::abs(nu.max()) < 1e-10);
    Field kx, nux;
    if (!ctx.flat_scaling) {
        kx = fd_derivative(K, Axis::x, 1, StencilSide::central);
        nux = fd_derivative(nu, Axis::x, 1, StencilSide::central);
        ctx.kx = &kx;
        ctx.nux = &nux;
    }

    BandConstants band = make_band(ctx, curve, x0_profile, neumann, z_knots, t_knots);

    HodographField Y;
    Y.z.assign(z_knots.begin(), z_knots.end());
    Y.t.assign(t_knots.begin(), t_knots.end());
    Y.val.assign(std::size_t(nzn) * ntn, 0.0);
    Y.dz.assign(std::size_t(nzn) * ntn, 0.0);
    for (int i = 0; i < nzn; ++i) Y.at(i, 0) = x0_profile[i];

    auto kval = [&](double x, double t) { return ctx.flat_scaling ? 1.0 : interp(*ctx.K, x, t); };
    auto kxval = [&](double x, double t) { return ctx.flat_scaling ? 0.0 : interp(*ctx.kx, x, t); };
    auto nuval = [&](double x, double t) { return ctx.flat_scaling ? 0.0 : interp(*ctx.nu, x, t); };
    auto nuxval = [&](double x, double t) { return ctx.flat_scaling ? 0.0 : interp(*ctx.nux, x, t); };

    std::vector<double> Yv(nzn), Ytry(nzn), F(nzn), Fn(nzn), lo(nzn), di(nzn), up(nzn), scratch;

    auto store_derivatives = [&](int ti, const std::vector<double>& Yrow, double g0, double gN) {
        Y.dz_at(0, ti) = g0;
        for (int i = 1; i + 1 < nzn; ++i)
            Y.dz_at(i, ti) = (Yrow[i + 1] - Yrow[i - 1]) / (2 * dz);
        Y.dz_at(nzn - 1, ti) = gN;
    };

    {
        std::vector<double> y0(x0_profile.begin(), x0_profile.end());
        store_derivatives(0, y0, (y0[1] - y0[0]) / dz, (y0[nzn - 1] - y0[nzn - 2]) / dz);
    }

    for (int i = 0; i < nzn; ++i) Yv[i] = x0_profile[i];

    for (int ti = 1; ti < ntn; ++ti) {
        const double t1 = t_knots[ti];
        const double dt = t1 - t_knots[ti - 1];
        const double pd = curve.pdot(t1);
        const double gN = neumann[ti];
        std::vector<double> prev = Yv;

        auto gamma = [&](double y0) { return -kval(y0, t1) / pd; };

        const double gx_lo = ctx.flat_scaling ? -1e300 : K.grid().x_min;
        const double gx_hi = ctx.flat_scaling ? 1e300 : K.grid().x_max;
        auto residual = [&](const std::vector<double>& W, std::vector<double>& out) -> bool {
            // trial iterates must stay inside the coefficient fields
            for (double wv : W)
                if (!(wv >= gx_lo && wv <= gx_hi)) return false;
            double g0 = gamma(W[0]);
            if (!(g0 > 0)) return false;
            out[0] = (W[0] - prev[0]) / dt
                   - (2 * W[1] - 2 * W[0] - 2 * dz * g0) / (g0 * g0 * dz * dz)
                   - nuval(W[0], t1);
            for (int i = 1; i + 1 < nzn; ++i) {
                double D = (W[i + 1] - W[i - 1]) / (2 * dz);
                if (!(D > 0)) return false;
                double S = (W[i + 1] - 2 * W[i] + W[i - 1]) / (dz * dz);
                out[i] = (W[i] - prev[i]) / dt - S / (D * D) - nuval(W[i], t1);
            }
            out[nzn - 1] = (W[nzn - 1] - prev[nzn - 1]) / dt
                         - (2 * W[nzn - 2] + 2 * dz * gN - 2 * W[nzn - 1]) / (gN * gN * dz * dz)
                         - nuval(W[nzn - 1], t1);
            return true;
        };

        if (!residual(Yv, F))
            throw SolverError(Errc::gradient_collapse,
                              "nonpositive slope entering slice t=" + std::to_string(t1));
        double fnorm = 0.0;
        for (double v : F) fnorm = std::max(fnorm, std::abs(v));
        // the residual cannot fall below the roundoff of its stiffest term
        double y_scale = 1.0;
        for (double v : Yv) y_scale = std::max(y_scale, std::abs(v));
        const double tol_eff = std::max(opt.newton_tol,
                                        8.0 * std::numeric_limits<double>::epsilon()
                                            * (1.0 / dt + 4.0 / (dz * dz)) * y_scale);
        int iters = 0;
        while (fnorm > tol_eff) {
            if (iters++ >= opt.max_newton)
                throw SolverError(Errc::newton_divergence,
                                  "hodograph slice t=" + std::to_string(t1)
                                  + " residual " + std::to_string(fnorm));
            // tridiagonal Jacobian, including the quasilinear Yz^-3 Yzz terms
            double g0 = gamma(Yv[0]);
            double g0p = -kxval(Yv[0], t1) / pd;
            double bracket0 = 2 * Yv[1] - 2 * Yv[0] - 2 * dz * g0;
            di[0] = 1.0 / dt + 2 * g0p * bracket0 / (g0 * g0 * g0 * dz * dz)
                  + (2 + 2 * dz * g0p) / (g0 * g0 * dz * dz) - nuxval(Yv[0], t1);
            up[0] = -2.0 / (g0 * g0 * dz * dz);
            lo[0] = 0.0;
            for (int i = 1; i + 1 < nzn; ++i) {
                double D = (Yv[i + 1] - Yv[i - 1]) / (2 * dz);
                double S = (Yv[i + 1] - 2 * Yv[i] + Yv[i - 1]) / (dz * dz);
                lo[i] = -(S / (D * D * D * dz) + 1.0 / (D * D * dz * dz));
                di[i] = 1.0 / dt + 2.0 / (D * D * dz * dz) - nuxval(Yv[i], t1);
                up[i] = S / (D * D * D * dz) - 1.0 / (D * D * dz * dz);
            }
            lo[nzn - 1] = -2.0 / (gN * gN * dz * dz);
            di[nzn - 1] = 1.0 / dt + 2.0 / (gN * gN * dz * dz) - nuxval(Yv[nzn - 1], t1);
            up[nzn - 1] = 0.0;

            for (int i = 0; i < nzn; ++i) F[i] = -F[i];
            solve_tridiag(lo, di, up, F, scratch);

            double lambda = 1.0;
            double fnew = std::numeric_limits<double>::infinity();
            for (int back = 0; back < 40; ++back) {
                for (int i = 0; i < nzn; ++i) Ytry[i] = Yv[i] + lambda * F[i];
                if (residual(Ytry, Fn)) {
                    fnew = 0.0;
                    for (double v : Fn) fnew = std::max(fnew, std::abs(v));
                    if (fnew <= fnorm) break;
                }
                lambda *= 0.5;
                if (lambda < 1e-8)
                    throw SolverError(Errc::newton_divergence,
                                      "hodograph damping floor at t=" + std::to_string(t1));
            }
            Yv.swap(Ytry);
            F.swap(Fn);    // F: residual at the new point, Fn: the step taken
            fnorm = fnew;
            // machine-precision stagnation: the step no longer moves Y
            double step = 0.0;
            for (double v : Fn) step = std::max(step, std::abs(lambda * v));
            if (step <= 4.0 * std::numeric_limits<double>::epsilon() * y_scale
                && fnorm <= 100.0 * tol_eff)
                break;
        }

        store_derivatives(ti, Yv, gamma(Yv[0]), gN);
        for (int i = 0; i < nzn; ++i) Y.at(i, ti) = Yv[i];

        if (opt.enforce_band) {
            double lo_band = band.lower_at(ti) * (1.0 - opt.band_slack);
            double hi_band = band.upper_at(ti) * (1.0 + opt.band_slack);
            for (int i = 0; i < nzn; ++i) {
                double h = Y.dz_at(i, ti);
                if (h < lo_band || h > hi_band)
                    throw SolverError(Errc::gradient_collapse,
                                      "Y_z = " + std::to_string(h) + " left the band ["
                                      + std::to_string(lo_band) + ", " + std::to_string(hi_band)
                                      + "] at t=" + std::to_string(t1));
            }
        }
    }

    if (band_out) *band_out = band;
    return Y;
}

} // namespace

HodographField solve_quasilinear(std::span<const double> x0_profile,
                                 const SurvivalCurve& curve,
                                 const Field& K, const Field& nu,
                                 std::span<const double> neumann,
                                 std::span<const double> z_knots,
                                 std::span<const double> t_knots,
                                 const QuasiOptions& opt,
                                 BandConstants* band_out) {
    return quasilinear_impl(x0_profile, curve, K, nu, neumann, z_knots, t_knots, opt, band_out);
}

HodographField solve_perturbed(double h,
                               std::span<const double> x0_profile,
                               const SurvivalCurve& curve,
                               const Field& K, const Field& nu,
                               std::span<const double> neumann,
                               std::span<const double> z_knots,
                               std::span<const double> t_knots,
                               const QuasiOptions& opt,
                               BandConstants* band_out) {
    SurvivalCurve shifted = curve.perturbed(h);
    std::vector<double> profile(x0_profile.begin(), x0_profile.end());
    for (double& v : profile) v += h;
    return quasilinear_impl(profile, shifted, K, nu, neumann, z_knots, t_knots, opt, band_out);
}

BracketReport bracket_validate(std::span<const double> b_window,
                               std::span<const double> x_edge,
                               const HodographField& up,
                               const HodographField& down) {
    const std::size_t n = up.t.size();
    if (down.t.size() != n || b_window.size() != n || x_edge.size() != n)
        throw SolverError(Errc::invalid_argument, "bracket inputs on different windows");

    BracketReport rep;
    rep.t.assign(up.t.begin(), up.t.end());
    rep.min_margin_boundary = std::numeric_limits<double>::infinity();
    rep.min_margin_edge = std::numeric_limits<double>::infinity();
    const int ze = up.nz();
    for (std::size_t i = 0; i < n; ++i) {
        double lo0 = down.at(0, int(i)), hi0 = up.at(0, int(i));
        double loE = down.at(ze, int(i)), hiE = up.at(ze, int(i));
        rep.lo_edge0.push_back(lo0);
        rep.boundary.push_back(b_window[i]);
        rep.hi_edge0.push_back(hi0);
        rep.lo_edgeE.push_back(loE);
        rep.level_edge.push_back(x_edge[i]);
        rep.hi_edgeE.push_back(hiE);

        double m0 = std::min(b_window[i] - lo0, hi0 - b_window[i]);
        double mE = std::min(x_edge[i] - loE, hiE - x_edge[i]);
        rep.min_margin_boundary = std::min(rep.min_margin_boundary, m0);
        rep.min_margin_edge = std::min(rep.min_margin_edge, mE);
        if (m0 < 0) ++rep.violations_boundary;
        if (mE < 0) ++rep.violations_edge;
        if (m0 == 0 || mE == 0) rep.nonstrict = true;
    }
    return rep;
}

} // namespace ifp
