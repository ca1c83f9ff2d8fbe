#include "ifp/inverse.hpp"

#include <algorithm>
#include <cmath>

#include "ifp/special.hpp"
#include "ifp/tridiag.hpp"

namespace ifp {

namespace {

// Non-divergence operator L w = w_xx - mu w_x on the grid, with a
// homogeneous Neumann row at the left edge (u = -w_x = 0 far below the
// barrier) and a Dirichlet zero row on the right. The same rows drive the
// baseline and the penalized solves, so their difference telescopes.
class DistributionOperator {
public:
    DistributionOperator(const SpaceTimeGrid& g, CoeffFn drift)
        : grid_(g), drift_(std::move(drift)) {
        has_drift_ = static_cast<bool>(drift_);
        if (has_drift_) {
            bool all_zero = true;
            for (int j = 0; j <= 8 && all_zero; ++j) {
                double x = g.x_min + (g.x_max - g.x_min) * j / 8.0;
                if (drift_(x, g.t0) != 0.0 || drift_(x, g.t1) != 0.0) all_zero = false;
            }
            if (all_zero) has_drift_ = false;
        }
    }

    struct Rows {
        std::vector<double> lo, di, up;
    };

    const Rows& rows(double t) {
        if (t == t_a_) return rows_a_;
        if (t == t_b_) return rows_b_;
        std::swap(t_a_, t_b_);
        std::swap(rows_a_, rows_b_);
        build(t, rows_a_);
        t_a_ = t;
        return rows_a_;
    }

    // L w with the Dirichlet row reporting zero
    void apply(const Rows& r, std::span<const double> w, std::span<double> out) const {
        const int nn = grid_.x_nodes();
        out[0] = r.di[0] * w[0] + r.up[0] * w[1];
        for (int j = 1; j + 1 < nn; ++j)
            out[j] = r.lo[j] * w[j - 1] + r.di[j] * w[j] + r.up[j] * w[j + 1];
        out[nn - 1] = 0.0;
    }

private:
    void build(double t, Rows& r) const {
        const int nn = grid_.x_nodes();
        const double dx = grid_.dx();
        r.lo.assign(nn, 0.0);
        r.di.assign(nn, 0.0);
        r.up.assign(nn, 0.0);
        // left edge: ghost from w_x = 0
        r.di[0] = -2.0 / (dx * dx);
        r.up[0] = 2.0 / (dx * dx);
        for (int j = 1; j + 1 < nn; ++j) {
            double m = has_drift_ ? drift_(grid_.x(j), t) : 0.0;
            r.lo[j] = 1.0 / (dx * dx) + m / (2 * dx);
            r.di[j] = -2.0 / (dx * dx);
            r.up[j] = 1.0 / (dx * dx) - m / (2 * dx);
        }
        // right edge row stays Dirichlet (handled by the steppers)
    }

    SpaceTimeGrid grid_;
    CoeffFn drift_;
    bool has_drift_ = false;
    double t_a_ = std::numeric_limits<double>::quiet_NaN();
    double t_b_ = std::numeric_limits<double>::quiet_NaN();
    Rows rows_a_, rows_b_;
};

void initial_distribution_slice(const ReducedSpec& spec, const SpaceTimeGrid& g,
                                std::span<double> out) {
    const InitialDensity& u0 = spec.reduced.initial_density;
    if (u0.is_delta()) {
        if (!(g.t0 > 0.0))
            throw SolverError(Errc::invalid_argument,
                              "point-mass initial law needs grid.t0 > 0 (analytic warm start)");
        double s = std::sqrt(2.0 * g.t0);
        for (int j = 0; j <= g.nx; ++j)
            out[j] = norm_sf((g.x(j) - u0.delta_x0) / s);
    } else {
        // cumulative from the right: node differences are then exact cell
        // integrals of the density, so the derived density stays nonnegative
        const double dx = g.dx();
        double acc = u0.tail_mass(g.x_max);
        out[g.nx] = acc;
        for (int j = g.nx - 1; j >= 0; --j) {
            double a = g.x(j);
            double cell = (u0(a) + 4.0 * u0(a + 0.5 * dx) + u0(a + dx)) * dx / 6.0;
            acc += cell;
            out[j] = acc;
        }
        // the Dirichlet row zeroes the right edge from the first step on;
        // the initial slice keeps its truncation-sized tail value
    }
}

} // namespace

PenaltyConfig PenaltyConfig::with_schedule(double eps0, double ratio, double eps_min) {
    if (!(eps0 > 0) || !(ratio > 1) || !(eps_min > 0) || eps_min > eps0)
        throw SolverError(Errc::invalid_argument, "bad schedule parameters");
    PenaltyConfig cfg;
    double e = eps0;
    while (e > eps_min * (1 + 1e-12)) {
        cfg.eps_schedule.push_back(e);
        e /= ratio;
    }
    cfg.eps_schedule.push_back(eps_min);
    return cfg;
}

void PenaltyConfig::validate() const {
    if (eps_schedule.empty())
        throw SolverError(Errc::invalid_argument, "empty eps schedule");
    for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
        if (!(eps_schedule[i] > 0))
            throw SolverError(Errc::invalid_argument, "eps must be positive");
        if (i > 0 && eps_schedule[i] >= eps_schedule[i - 1])
            throw SolverError(Errc::invalid_argument, "eps schedule must strictly decrease");
    }
    if (!(newton_tol > 0) || max_newton < 1)
        throw SolverError(Errc::invalid_argument, "bad Newton parameters");
}

Field baseline_distribution(const ReducedSpec& spec, const SpaceTimeGrid& grid) {
    Field w0(grid, FieldKind::distribution);
    initial_distribution_slice(spec, grid, w0.slice(0));

    DistributionOperator op(grid, spec.reduced.mu);
    const int nn = grid.x_nodes();
    const double dt = grid.dt();
    std::vector<double> lo(nn), di(nn), up(nn), rhs(nn), lw(nn), scratch;

    for (int n = 0; n < grid.nt; ++n) {
        const auto& Rn = op.rows(grid.t(n));
        const auto& Rn1 = op.rows(grid.t(n + 1));
        auto prev = w0.slice(n);
        op.apply(Rn, prev, lw);
        for (int j = 0; j < nn; ++j) {
            lo[j] = -0.5 * dt * Rn1.lo[j];
            di[j] = 1.0 - 0.5 * dt * Rn1.di[j];
            up[j] = -0.5 * dt * Rn1.up[j];
            rhs[j] = prev[j] + 0.5 * dt * lw[j];
        }
        // Dirichlet right edge
        lo[nn - 1] = 0.0; di[nn - 1] = 1.0; up[nn - 1] = 0.0; rhs[nn - 1] = 0.0;
        solve_tridiag(lo, di, up, rhs, scratch);
        std::copy(rhs.begin(), rhs.end(), w0.slice(n + 1).begin());
    }

    for (int n = 0; n <= grid.nt; ++n)
        if (w0.at(0, n) < 1.0 - 1e-8)
            throw SolverError(Errc::truncation_too_tight,
                              "baseline left edge dropped to " + std::to_string(w0.at(0, n))
                              + " at t=" + std::to_string(grid.t(n)));
    return w0;
}

Field solve_penalized(const SurvivalCurve& curve, const ReducedSpec& spec,
                      const SpaceTimeGrid& grid, double eps,
                      const PenaltyConfig& cfg, const Field& baseline,
                      const Field* warm, LevelReport* report) {
    if (!baseline.grid().same_shape(grid))
        throw SolverError(Errc::invalid_argument, "baseline grid mismatch");
    if (curve.t_back() < grid.t1 - 1e-12)
        throw SolverError(Errc::invalid_argument, "survival curve does not cover the grid");

    const double m = cfg.m > 0 ? cfg.m : curve.sup_abs_pdot();
    auto beta = [m, eps](double w_minus_p) {
        double z = w_minus_p / eps;
        return z > 0 ? m * z * z * z : 0.0;
    };
    auto beta_prime = [m, eps](double w_minus_p) {
        double z = w_minus_p / eps;
        return z > 0 ? 3.0 * m * z * z / eps : 0.0;
    };

    DistributionOperator op(grid, spec.reduced.mu);
    const int nn = grid.x_nodes();
    const double dt = grid.dt();

    Field w(grid, FieldKind::distribution);
    std::copy(baseline.slice(0).begin(), baseline.slice(0).end(), w.slice(0).begin());

    std::vector<double> lo(nn), di(nn), up(nn), rhs(nn), lw(nn), F(nn), Wv(nn), Wtry(nn), scratch;
    LevelReport lr;
    lr.eps = eps;

    for (int n = 0; n < grid.nt; ++n) {
        const double t1 = grid.t(n + 1);
        const double p1 = curve.p(t1);
        const auto& Rn = op.rows(grid.t(n));
        const auto& Rn1 = op.rows(t1);
        auto prev = w.slice(n);
        op.apply(Rn, prev, lw);

        // explicit part of the CN residual
        std::vector<double>& expl = rhs;
        for (int j = 0; j < nn; ++j)
            expl[j] = prev[j] / dt + 0.5 * lw[j];

        // Newton start: previous eps level if available, else previous slice
        if (warm)
            std::copy(warm->slice(n + 1).begin(), warm->slice(n + 1).end(), Wv.begin());
        else
            std::copy(prev.begin(), prev.end(), Wv.begin());
        Wv[nn - 1] = 0.0;

        auto residual = [&](const std::vector<double>& W, std::vector<double>& out) {
            op.apply(Rn1, W, out);
            for (int j = 0; j + 1 < nn; ++j)
                out[j] = W[j] / dt - 0.5 * out[j] + beta(W[j] - p1) - expl[j];
            out[nn - 1] = W[nn - 1];
        };

        residual(Wv, F);
        double fnorm = 0.0;
        for (double v : F) fnorm = std::max(fnorm, std::abs(v));
        int iters = 0;
        while (fnorm > cfg.newton_tol) {
            if (iters++ >= cfg.max_newton)
                throw SolverError(Errc::newton_divergence,
                                  "slice " + std::to_string(n + 1) + " residual "
                                  + std::to_string(fnorm));
            for (int j = 0; j < nn; ++j) {
                lo[j] = -0.5 * Rn1.lo[j];
                di[j] = 1.0 / dt - 0.5 * Rn1.di[j] + beta_prime(Wv[j] - p1);
                up[j] = -0.5 * Rn1.up[j];
                F[j] = -F[j];
            }
            lo[nn - 1] = 0.0; di[nn - 1] = 1.0; up[nn - 1] = 0.0; F[nn - 1] = -Wv[nn - 1];
            solve_tridiag(lo, di, up, F, scratch); // F now holds the Newton step
            double lambda = 1.0;
            std::vector<double> Fn(nn);
            double fnew = fnorm;
            for (int back = 0; back < 30; ++back) {
                for (int j = 0; j < nn; ++j) Wtry[j] = Wv[j] + lambda * F[j];
                residual(Wtry, Fn);
                fnew = 0.0;
                for (double v : Fn) fnew = std::max(fnew, std::abs(v));
                if (fnew <= fnorm || lambda < 1e-6) break;
                lambda *= 0.5; // damp on residual increase
            }
            Wv.swap(Wtry);
            F.swap(Fn);
            fnorm = fnew;
        }
        lr.newton_total += iters;
        lr.newton_worst_slice = std::max(lr.newton_worst_slice, iters);
        lr.worst_residual = std::max(lr.worst_residual, fnorm);

        // bounds check: 0 <= w <= min(p + eps, w0) within slack
        for (int j = 0; j < nn; ++j) {
            double cap = std::min(p1 + eps, baseline.at(j, n + 1));
            if (Wv[j] < -cfg.bounds_slack || Wv[j] > cap + cfg.bounds_slack)
                throw SolverError(Errc::bounds_violation,
                                  "w outside [0, min(p+eps, w0)] at slice "
                                  + std::to_string(n + 1) + ", node " + std::to_string(j)
                                  + ": w=" + std::to_string(Wv[j]));
        }
        std::copy(Wv.begin(), Wv.end(), w.slice(n + 1).begin());
    }
    if (report) *report = lr;
    return w;
}

Boundary extract_boundary(const Field& w, const SurvivalCurve& curve, double theta) {
    const SpaceTimeGrid& g = w.grid();
    if (!(theta > 0))
        throw SolverError(Errc::invalid_argument, "extraction threshold must be positive");
    Boundary out;
    out.t.reserve(g.nt + 1);
    out.b.reserve(g.nt + 1);

    for (int n = 0; n <= g.nt; ++n) {
        const double t = g.t(n);
        const double p = curve.p(t);
        auto slice = w.slice(n);
        double wmax = slice[0];
        for (double v : slice) wmax = std::max(wmax, v);

        out.t.push_back(t);
        // A locally constant p absorbs nothing, so the constraint cannot
        // bind there; and a slice whose distribution stays strictly below
        // the obstacle is untouched by the penalty. Both give -inf.
        if (curve.pdot(t) >= -1e-12 || wmax < p) {
            out.b.push_back(kMinusInf);
            continue;
        }
        const double base = std::max(p, wmax);
        const double level1 = base - theta;
        const double level2 = base - 4.0 * theta;
        if (!(level1 > 0)) {
            out.b.push_back(kMinusInf);
            continue;
        }

        auto crossing_from = [&](int start, double level, int& jout) -> double {
            for (int j = start; j <= g.nx; ++j) {
                if (slice[j] < level) {
                    jout = j;
                    if (j == 0) return g.x_min;
                    double w0v = slice[j - 1], w1v = slice[j];
                    double s = (w0v - level) / (w0v - w1v);
                    return g.x(j - 1) + s * g.dx();
                }
            }
            jout = -1;
            return g.x_max;
        };

        int j1 = -1, j2 = -1;
        double x1 = crossing_from(0, level1, j1);
        if (j1 == 0) {
            out.b.push_back(kMinusInf);
            continue;
        }
        double b_est;
        if (j1 < 0) {
            b_est = g.x_max; // threshold never reached; clamp to the ceiling
        } else if (level2 > 0) {
            double x2 = crossing_from(j1, level2, j2);
            // quadratic contact: distance from b grows like sqrt(level drop),
            // so doubling the drop doubles nothing -- extrapolate 2*x1 - x2
            b_est = (j2 > 0) ? std::clamp(2.0 * x1 - x2, g.x_min, x1) : x1;
        } else {
            b_est = x1;
        }
        out.b.push_back(b_est);
    }
    return usc_envelope(out);
}

Field penalty_residual(const Field& w, const Field& baseline,
                       const ReducedSpec& spec, const SpaceTimeGrid& grid) {
    if (!w.grid().same_shape(grid) || !baseline.grid().same_shape(grid))
        throw SolverError(Errc::invalid_argument, "field grid mismatch");
    DistributionOperator op(grid, spec.reduced.mu);
    const int nn = grid.x_nodes();
    const double dt = grid.dt();
    Field res(grid, FieldKind::other);
    std::vector<double> lw_n(nn), lw_n1(nn), l0_n(nn), l0_n1(nn);
    for (int n = 1; n <= grid.nt; ++n) {
        const auto& Rn = op.rows(grid.t(n - 1));
        const auto& Rn1 = op.rows(grid.t(n));
        op.apply(Rn, w.slice(n - 1), lw_n);
        op.apply(Rn1, w.slice(n), lw_n1);
        op.apply(Rn, baseline.slice(n - 1), l0_n);
        op.apply(Rn1, baseline.slice(n), l0_n1);
        for (int j = 0; j + 1 < nn; ++j) {
            double lhs_w = (w.at(j, n) - w.at(j, n - 1)) / dt - 0.5 * (lw_n1[j] + lw_n[j]);
            double lhs_0 = (baseline.at(j, n) - baseline.at(j, n - 1)) / dt
                         - 0.5 * (l0_n1[j] + l0_n[j]);
            res.at(j, n) = -(lhs_w - lhs_0);
        }
        res.at(nn - 1, n) = 0.0;
    }
    return res;
}

InverseSolution epsilon_continuation(const SurvivalCurve& curve, const ReducedSpec& spec,
                                     const SpaceTimeGrid& grid, const PenaltyConfig& cfg_in) {
    PenaltyConfig cfg = cfg_in;
    cfg.validate();
    if (cfg.m <= 0) cfg.m = curve.sup_abs_pdot();

    ConvergenceReport rep;
    rep.m = cfg.m;

    Field baseline = baseline_distribution(spec, grid);
    Field current = baseline; // warm start for the first level
    double eps_final = cfg.eps_schedule.front();

    for (std::size_t k = 0; k < cfg.eps_schedule.size(); ++k) {
        LevelReport lr;
        Field next = solve_penalized(curve, spec, grid, cfg.eps_schedule[k], cfg,
                                     baseline, &current, &lr);
        double diff = 0.0;
        for (int n = 0; n <= grid.nt; ++n) {
            auto a = next.slice(n);
            auto b = current.slice(n);
            for (int j = 0; j <= grid.nx; ++j)
                diff = std::max(diff, std::abs(a[j] - b[j]));
        }
        lr.diff_prev = diff;
        rep.levels.push_back(lr);
        current = std::move(next);
        eps_final = cfg.eps_schedule[k];
        if (k >= 1 && diff < cfg.cont_tol) {
            rep.converged = true;
            break;
        }
    }
    if (!rep.converged) rep.schedule_exhausted = true; // best iterate, flagged

    Field u = fd_derivative(current, Axis::x, 1, StencilSide::central);
    for (int n = 0; n <= grid.nt; ++n)
        for (int j = 0; j <= grid.nx; ++j)
            u.at(j, n) = -u.at(j, n);

    double theta = cfg.theta ? *cfg.theta : std::max(eps_final, 10.0 * cfg.newton_tol);
    rep.theta = theta;
    Boundary b = extract_boundary(current, curve, theta);

    InverseSolution sol{std::move(current), std::move(u), std::move(b), eps_final, std::move(rep)};
    return sol;
}

} // namespace ifp
