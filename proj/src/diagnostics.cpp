#include "ifp/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ifp {

double FbResidualSeries::median_relative(double t_lo, double t_hi) const {
    std::vector<double> vals;
    for (std::size_t i = 0; i < relative.t.size(); ++i)
        if (relative.t[i] >= t_lo && relative.t[i] <= t_hi)
            vals.push_back(std::abs(relative.value[i]));
    if (vals.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(vals.begin(), vals.end());
    std::size_t n = vals.size();
    return n % 2 ? vals[n / 2] : 0.5 * (vals[n / 2 - 1] + vals[n / 2]);
}

FbResidualSeries fb_residual(const Field& u, const Boundary& b,
                             const SurvivalCurve& curve, const ReducedSpec& spec,
                             double anchor_offset) {
    (void)spec; // volatility-reduced frame: sigma^2 = 2
    const SpaceTimeGrid& g = u.grid();
    FbResidualSeries out;
    out.absolute.name = "fb_residual_abs";
    out.relative.name = "fb_residual_rel";
    const double dx = g.dx();
    if (anchor_offset < 0) anchor_offset = 2.5 * dx;
    for (int n = 0; n <= g.nt; ++n) {
        const double t = g.t(n);
        const double bt = b(t);
        if (!std::isfinite(bt)) continue;
        // first node strictly above b + offset, clear of the corner cells
        int j0 = g.floor_index(bt + anchor_offset) + 1;
        if (j0 + 2 > g.nx) continue;
        double u0 = u.at(j0, n), u1 = u.at(j0 + 1, n), u2 = u.at(j0 + 2, n);
        double d1 = (-3 * u0 + 4 * u1 - u2) / (2 * dx);
        double d2 = (u0 - 2 * u1 + u2) / (dx * dx);
        double ux_b = d1 + (bt - g.x(j0)) * d2; // quadratic fit evaluated at b
        double pdot_t = curve.pdot(t);
        double r = 2.0 * ux_b + 2.0 * pdot_t;
        out.absolute.t.push_back(t);
        out.absolute.value.push_back(r);
        if (pdot_t != 0.0) {
            out.relative.t.push_back(t);
            out.relative.value.push_back(r / std::abs(2.0 * pdot_t));
        }
    }
    out.skipped = out.absolute.t.empty();
    return out;
}

std::vector<WeakBoundsAtTime> weak_fb_bounds(const Field& u, const Boundary& b,
                                             const SurvivalCurve& curve,
                                             std::span<const double> deltas,
                                             std::span<const double> times) {
    const SpaceTimeGrid& g = u.grid();
    if (deltas.empty() || times.empty())
        throw SolverError(Errc::invalid_argument, "need deltas and target times");
    std::vector<double> dsorted(deltas.begin(), deltas.end());
    std::sort(dsorted.begin(), dsorted.end(), std::greater<>());

    std::vector<WeakBoundsAtTime> out;
    for (double tstar : times) {
        double bt = b(tstar);
        if (!std::isfinite(bt)) continue;
        WeakBoundsAtTime w;
        w.t = tstar;
        w.target = -2.0 * curve.pdot(tstar);
        for (double delta : dsorted) {
            double lo = std::numeric_limits<double>::infinity();
            double hi = -lo;
            int n_hi = std::min(g.nt, int(std::floor((tstar - g.t0) / g.dt() + 1e-9)));
            int n_lo = std::max(0, int(std::ceil((tstar - delta - g.t0) / g.dt())));
            for (int n = n_lo; n <= n_hi; ++n) {
                double s = g.t(n);
                double ls = b(s);
                if (!std::isfinite(ls)) continue;
                double dt2 = (s - tstar) * (s - tstar);
                if (dt2 >= delta * delta) continue;
                double span = std::sqrt(delta * delta - dt2);
                int j_lo = std::max(0, g.floor_index(bt - span));
                int j_hi = std::min(g.nx, g.floor_index(bt + span) + 1);
                for (int j = j_lo; j <= j_hi; ++j) {
                    double x = g.x(j);
                    if (x <= ls) continue;
                    double dx2 = (x - bt) * (x - bt);
                    if (dx2 + dt2 >= delta * delta) continue;
                    double ratio = 2.0 * u.at(j, n) / (x - ls);
                    lo = std::min(lo, ratio);
                    hi = std::max(hi, ratio);
                }
            }
            if (!std::isfinite(lo)) {
                if (delta == dsorted.back())
                    throw SolverError(Errc::empty_neighborhood,
                                      "no nodes within delta=" + std::to_string(delta)
                                      + " of the boundary at t=" + std::to_string(tstar));
                continue;
            }
            w.delta.push_back(delta);
            w.inf_ratio.push_back(lo);
            w.sup_ratio.push_back(hi);
        }
        if (!w.delta.empty()) {
            double slack = 1e-12 * std::max(1.0, std::abs(w.target));
            w.straddle = w.inf_ratio.back() <= w.target + slack
                      && w.target - slack <= w.sup_ratio.back();
        }
        out.push_back(std::move(w));
    }
    return out;
}

HolderEstimate holder_estimate(const Boundary& b, double t_lo, double t_hi,
                               double lag_lo, double lag_hi, int n_lags) {
    std::vector<double> tt, bb;
    for (std::size_t i = 0; i < b.t.size(); ++i)
        if (b.t[i] >= t_lo - 1e-12 && b.t[i] <= t_hi + 1e-12 && std::isfinite(b.b[i])) {
            tt.push_back(b.t[i]);
            bb.push_back(b.b[i]);
        }
    if (tt.size() < 64)
        throw SolverError(Errc::invalid_argument,
                          "need at least 64 finite knots in the window, have "
                          + std::to_string(tt.size()));
    if (!(lag_lo > 0) || !(lag_hi > lag_lo))
        throw SolverError(Errc::invalid_argument, "bad lag range");

    const double dt = tt[1] - tt[0];
    std::vector<double> logtau, logmod;
    for (int k = 0; k < n_lags; ++k) {
        double tau = lag_lo * std::pow(lag_hi / lag_lo, double(k) / (n_lags - 1));
        int lag = std::max(1, int(std::lround(tau / dt)));
        if (lag >= int(tt.size())) continue;
        double mod = 0.0;
        for (std::size_t i = 0; i + lag < tt.size(); ++i)
            mod = std::max(mod, std::abs(bb[i + lag] - bb[i]));
        if (mod <= 0.0)
            throw SolverError(Errc::degenerate_regression, "flat boundary in the window");
        double lt = std::log(double(lag) * dt);
        if (!logtau.empty() && lt == logtau.back()) continue; // duplicate rounded lag
        logtau.push_back(lt);
        logmod.push_back(std::log(mod));
    }
    if (logtau.size() < 3)
        throw SolverError(Errc::degenerate_regression, "too few usable lags");

    const std::size_t n = logtau.size();
    double mx = std::accumulate(logtau.begin(), logtau.end(), 0.0) / n;
    double my = std::accumulate(logmod.begin(), logmod.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (logtau[i] - mx) * (logtau[i] - mx);
        sxy += (logtau[i] - mx) * (logmod[i] - my);
    }
    double slope = sxy / sxx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double fit = my + slope * (logtau[i] - mx);
        ss_res += (logmod[i] - fit) * (logmod[i] - fit);
    }
    HolderEstimate est;
    est.alpha = std::min(slope, 1.0); // lag-regression convention caps at 1
    est.stderr_ = (n > 2) ? std::sqrt(ss_res / double(n - 2) / sxx) : 0.0;
    est.lags = int(n);
    return est;
}

MetricSeries sign_changes(const Field& v, const Boundary& b, double deadband) {
    const SpaceTimeGrid& g = v.grid();
    MetricSeries out;
    out.name = "sign_changes";
    const double dx = g.dx();
    for (int n = 0; n <= g.nt; ++n) {
        double t = g.t(n);
        double bt = b(t);
        int j0 = std::isfinite(bt) ? std::max(0, g.floor_index(bt) + 1) : 0;
        // relative dead-band keeps the count invariant under v -> c v
        double scale = 0.0;
        for (int j = j0; j < g.nx; ++j)
            scale = std::max(scale, std::abs(v.at(j + 1, n) - v.at(j, n)) / dx);
        double band = deadband * scale;
        int count = 0, last_sign = 0;
        for (int j = j0; j < g.nx; ++j) {
            double d = (v.at(j + 1, n) - v.at(j, n)) / dx;
            if (std::abs(d) <= band) continue;
            int s = d > 0 ? 1 : -1;
            if (last_sign != 0 && s != last_sign) ++count;
            last_sign = s;
        }
        out.t.push_back(t);
        out.value.push_back(double(count));
    }
    return out;
}

RoundTripResult round_trip(const SurvivalCurve& curve, const DiffusionSpec& spec,
                           const ReducedSpec& reduced, const SpaceTimeGrid& grid,
                           const RoundTripOptions& opt) {
    RoundTripResult rt;
    rt.inverse = epsilon_continuation(curve, reduced, grid, opt.penalty);

    rt.pde = forward_pde(reduced, rt.inverse.b, grid);
    rt.err_pde = rt.pde.sup_error_against(curve);

    DiagnosticReport& rep = rt.report;
    rep.add({"roundtrip_pde_sup_error", rt.err_pde, opt.tol_roundtrip_pde,
             rt.err_pde <= opt.tol_roundtrip_pde, false, ""});

    if (opt.run_mc) {
        Boundary original_b = reduced.unmap_boundary(rt.inverse.b);
        rt.mc = forward_mc(spec, original_b, opt.mc);
        double worst = 0.0, worst_se = 0.0;
        for (std::size_t k = 0; k < rt.mc->t.size(); ++k) {
            double err = std::abs(rt.mc->p[k] - curve.p(rt.mc->t[k]));
            if (err > worst) { worst = err; worst_se = rt.mc->se[k]; }
        }
        rt.err_mc = worst;
        double tol = 3.0 * std::max(worst_se, 1e-6) + opt.tol_roundtrip_pde;
        rep.add({"roundtrip_mc_sup_error", rt.err_mc, tol, rt.err_mc <= tol, false,
                 "3 SE + PDE tolerance"});

        // discrepancy constant of the two forward routes:
        // |p_pde - p_mc| <= 3 SE + C (dx + dt), C reported, not gated
        double c_est = 0.0;
        for (std::size_t k = 0; k < rt.mc->t.size(); ++k) {
            double t = rt.mc->t[k];
            if (t < grid.t0 || t > grid.t1) continue;
            double p_pde = rt.pde.p[std::min<std::size_t>(
                rt.pde.t.size() - 1,
                std::size_t(std::lround((t - grid.t0) / grid.dt())))];
            double gap = std::abs(p_pde - rt.mc->p[k]) - 3.0 * rt.mc->se[k];
            if (gap > 0) c_est = std::max(c_est, gap / (grid.dx() + grid.dt()));
        }
        rep.add({"pde_mc_discrepancy_constant", c_est, 0.0, true, false,
                 "C in |p_pde - p_mc| <= 3 SE + C (dx + dt)"});
    }

    const bool have_boundary = !rt.inverse.b.all_infinite();
    const double t_hi = grid.t1;

    rt.fb = fb_residual(rt.inverse.u, rt.inverse.b, curve, reduced);
    if (rt.fb.skipped || !have_boundary) {
        rep.add({"fb_residual_median_rel", 0.0, opt.tol_fb_median, true, true,
                 "skipped: boundary is -inf"});
    } else {
        double med = rt.fb.median_relative(opt.window_lo, t_hi);
        rep.add({"fb_residual_median_rel", med, opt.tol_fb_median,
                 med <= opt.tol_fb_median, false, ""});
        rt.report.series.push_back(rt.fb.absolute);
        rt.report.series.push_back(rt.fb.relative);
    }

    if (have_boundary) {
        std::vector<double> deltas = opt.deltas;
        if (deltas.empty())
            deltas = {8 * grid.dx(), 4 * grid.dx(), 2 * grid.dx()};
        std::vector<double> times;
        for (int k = 0; k < opt.weak_times; ++k)
            times.push_back(opt.window_lo
                            + (t_hi - opt.window_lo) * (k + 1) / double(opt.weak_times));
        rt.weak = weak_fb_bounds(rt.inverse.u, rt.inverse.b, curve, deltas, times);
        bool all = !rt.weak.empty();
        for (const auto& w : rt.weak) all = all && w.straddle;
        rep.add({"weak_fb_straddle", all ? 1.0 : 0.0, 1.0, all, false,
                 "1 = straddle holds at every tested time"});

        try {
            double lag_lo = 4 * grid.dt();
            double lag_hi = (t_hi - opt.window_lo) / 8.0;
            rt.holder = holder_estimate(rt.inverse.b, opt.window_lo, t_hi, lag_lo, lag_hi);
            rep.add({"holder_alpha", rt.holder->alpha, opt.tol_holder,
                     rt.holder->alpha >= opt.tol_holder, false, "lower bound"});
        } catch (const SolverError& e) {
            rep.add({"holder_alpha", 0.0, opt.tol_holder, false, true, e.what()});
        }
    } else {
        rep.add({"weak_fb_straddle", 0.0, 1.0, true, true, "skipped: boundary is -inf"});
        rep.add({"holder_alpha", 0.0, opt.tol_holder, true, true, "skipped: boundary is -inf"});
    }
    return rt;
}

} // namespace ifp
