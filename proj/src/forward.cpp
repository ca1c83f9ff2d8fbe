#include "ifp/forward.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <future>
#include <mutex>
#include <random>
#include <thread>

#include "ifp/parabolic.hpp"
#include "ifp/special.hpp"
#include "ifp/tridiag.hpp"

namespace ifp {

namespace detail {

DensityStepper::DensityStepper(const SpaceTimeGrid& g, CoeffFn drift)
    : grid_(g), drift_(std::move(drift)) {
    has_drift_ = static_cast<bool>(drift_);
    if (has_drift_) {
        // constant-zero drift is common after reduction; detect and drop it
        bool all_zero = true;
        for (int j = 0; j <= 8 && all_zero; ++j) {
            double x = g.x_min + (g.x_max - g.x_min) * j / 8.0;
            if (drift_(x, g.t0) != 0.0 || drift_(x, g.t1) != 0.0) all_zero = false;
        }
        if (all_zero) has_drift_ = false;
    }
}

void DensityStepper::drift_at(double t, std::vector<double>& mid, std::vector<double>& node) {
    const int nn = grid_.x_nodes();
    if (!has_drift_) {
        mid.assign(nn - 1, 0.0);
        node.assign(nn, 0.0);
        return;
    }
    if (t == cache_t_) { mid = cache_mid_; node = cache_node_; return; }
    if (t == cache2_t_) { mid = cache2_mid_; node = cache2_node_; return; }
    mid.assign(nn - 1, 0.0);
    node.assign(nn, 0.0);
    const double dx = grid_.dx();
    for (int j = 0; j < nn; ++j) node[j] = drift_(grid_.x(j), t);
    for (int j = 0; j + 1 < nn; ++j) mid[j] = drift_(grid_.x(j) + 0.5 * dx, t);
    cache2_t_ = cache_t_;
    cache2_mid_ = std::move(cache_mid_);
    cache2_node_ = std::move(cache_node_);
    cache_t_ = t;
    cache_mid_ = mid;
    cache_node_ = node;
}

DensityStepper::Rows DensityStepper::assemble(double t, double barrier) {
    const int nn = grid_.x_nodes();
    const double dx = grid_.dx();
    Rows r;
    r.lo.assign(nn, 0.0);
    r.di.assign(nn, 0.0);
    r.up.assign(nn, 0.0);

    std::vector<double> mid, node;
    drift_at(t, mid, node);

    int first = 0;
    double h_left = dx;
    if (std::isfinite(barrier)) {
        if (barrier >= grid_.x_max)
            throw SolverError(Errc::out_of_domain, "barrier at or above the grid ceiling");
        if (barrier >= grid_.x_min) {
            int jb = grid_.floor_index(barrier); // last node with x <= barrier
            first = jb + 1;
            h_left = grid_.x(first) - barrier;   // in (0, dx]
            if (h_left <= 0) { ++first; h_left = grid_.x(first) - barrier; }
        }
    }
    r.first_active = first;

    for (int j = first; j < nn; ++j) {
        if (j == first && first > 0 && h_left < dx) {
            // cut cell: Dirichlet zero at the barrier, shortened left arm
            const double hl = h_left, hr = dx;
            double mc = node[j];
            double mr = (j + 1 < nn) ? node[j + 1] : 0.0;
            double denom = hl * hr * (hl + hr);
            r.di[j] = -2.0 / (hl * hr) - (hr * hr - hl * hl) * mc / denom;
            if (j + 1 < nn) r.up[j] = 2.0 / (hr * (hl + hr)) - hl * hl * mr / denom;
        } else if (j == first && first > 0) {
            // barrier aligned with node j-1: standard stencil, left value zero
            r.di[j] = -2.0 / (dx * dx) + (mid[j - 1] - mid[j]) / (2 * dx);
            if (j + 1 < nn) r.up[j] = 1.0 / (dx * dx) - mid[j] / (2 * dx);
        } else if (j == 0) {
            // zero-flux left edge
            r.di[j] = -1.0 / (dx * dx) - mid[0] / (2 * dx);
            r.up[j] = 1.0 / (dx * dx) - mid[0] / (2 * dx);
        } else if (j == nn - 1) {
            // zero-flux right edge
            r.lo[j] = 1.0 / (dx * dx) + mid[j - 1] / (2 * dx);
            r.di[j] = -1.0 / (dx * dx) + mid[j - 1] / (2 * dx);
        } else {
            r.lo[j] = 1.0 / (dx * dx) + mid[j - 1] / (2 * dx);
            r.di[j] = -2.0 / (dx * dx) + (mid[j - 1] - mid[j]) / (2 * dx);
            r.up[j] = 1.0 / (dx * dx) - mid[j] / (2 * dx);
        }
    }
    return r;
}

void DensityStepper::step(std::span<const double> un, std::span<double> un1,
                          double t_n, double t_n1, double b_n, double b_n1,
                          double theta) {
    const int nn = grid_.x_nodes();
    const double dt = t_n1 - t_n;
    Rows Ln = assemble(t_n, b_n);
    Rows Ln1 = assemble(t_n1, b_n1);
    const bool same_geometry = (Ln.first_active == Ln1.first_active) && (b_n == b_n1);

    work_lo_.assign(nn, 0.0);
    work_di_.assign(nn, 1.0);
    work_up_.assign(nn, 0.0);
    work_rhs_.assign(nn, 0.0);

    for (int j = 0; j < nn; ++j) {
        if (j < Ln1.first_active) { // clamped at the new level
            work_rhs_[j] = 0.0;
            continue;
        }
        double th = theta;
        // rows near a moved barrier fall back to implicit Euler
        if (!same_geometry && j <= std::max(Ln.first_active, Ln1.first_active) + 1)
            th = 1.0;
        work_lo_[j] = -th * dt * Ln1.lo[j];
        work_di_[j] = 1.0 - th * dt * Ln1.di[j];
        work_up_[j] = -th * dt * Ln1.up[j];

        double expl = un[j];
        if (th < 1.0 && j >= Ln.first_active) {
            double lu = Ln.di[j] * un[j];
            if (j > 0) lu += Ln.lo[j] * un[j - 1];
            if (j + 1 < nn) lu += Ln.up[j] * un[j + 1];
            expl += (1.0 - th) * dt * lu;
        }
        work_rhs_[j] = expl;
    }
    solve_tridiag(work_lo_, work_di_, work_up_, work_rhs_, scratch_);
    std::copy(work_rhs_.begin(), work_rhs_.end(), un1.begin());
    for (int j = 0; j < Ln1.first_active; ++j) un1[j] = 0.0;
}

} // namespace detail

// ---------------------------------------------------------------------------

double ForwardResult::sup_error_against(const SurvivalCurve& curve) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i)
        worst = std::max(worst, std::abs(p[i] - curve.p(t[i])));
    return worst;
}

double delta_warmstart_time(double x0, const Boundary& barrier,
                            double tail_tol, double cap) {
    // distance to the barrier near the start
    double d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < barrier.t.size(); ++i)
        if (std::isfinite(barrier.b[i]) && barrier.t[i] <= barrier.t.front() + cap)
            d = std::min(d, x0 - barrier.b[i]);
    if (!std::isfinite(d)) return cap; // no active constraint near the start
    if (d <= 0.0)
        throw SolverError(Errc::invalid_argument, "point mass starts at or below the barrier");
    // solve norm_cdf(-d / sqrt(2 t)) = tail_tol for t
    double z = 7.0344838339191; // norm_cdf(-z) ~ 1e-12
    if (tail_tol != 1e-12) {
        double lo = 1.0, hi = 40.0;
        for (int it = 0; it < 80; ++it) {
            double m = 0.5 * (lo + hi);
            (norm_cdf(-m) > tail_tol ? lo : hi) = m;
        }
        z = 0.5 * (lo + hi);
    }
    return std::min(cap, d * d / (2.0 * z * z));
}

ForwardResult forward_pde(const ReducedSpec& spec, const Boundary& barrier,
                          const SpaceTimeGrid& grid, const PdeOptions& opt) {
    const InitialDensity& u0 = spec.reduced.initial_density;
    const int nn = grid.x_nodes();

    ForwardResult res;
    res.method = "pde";

    std::vector<double> cur(nn, 0.0), nxt(nn, 0.0);
    double b0 = barrier(grid.t0);
    if (u0.is_delta()) {
        if (!(grid.t0 > 0.0))
            throw SolverError(Errc::invalid_argument,
                              "point-mass initial law needs grid.t0 > 0 (analytic warm start)");
        double s = std::sqrt(2.0 * grid.t0);
        for (int j = 0; j < nn; ++j)
            cur[j] = norm_pdf((grid.x(j) - u0.delta_x0) / s) / s;
        if (std::isfinite(b0))
            res.warmstart_tail = norm_cdf(-(u0.delta_x0 - b0) / s);
    } else {
        for (int j = 0; j < nn; ++j)
            cur[j] = u0(grid.x(j));
    }

    // realize the initial law exactly on the grid: unit trapezoid mass
    double mass = integrate_slice(cur, grid, grid.x_min, grid.x_max);
    if (mass < 0.5)
        throw SolverError(Errc::truncation_too_tight,
                          "initial density mass " + std::to_string(mass) + " on grid");
    res.normalization = 1.0 / mass;
    for (double& v : cur) v *= res.normalization;

    if (std::isfinite(b0))
        for (int j = 0; j < nn; ++j)
            if (grid.x(j) <= b0) cur[j] = 0.0;

    std::optional<Field> field;
    if (opt.store_field) field.emplace(grid, FieldKind::density);

    detail::DensityStepper stepper(grid, spec.reduced.mu);

    auto record = [&](int n, std::span<const double> slice) {
        if (field) std::copy(slice.begin(), slice.end(), field->slice(n).begin());
        double b = barrier(grid.t(n));
        res.t.push_back(grid.t(n));
        res.p.push_back(integrate_slice(slice, grid,
                                        std::isfinite(b) ? b : grid.x_min, grid.x_max));
    };

    record(0, cur);
    double min_seen = 0.0;
    for (int n = 0; n < grid.nt; ++n) {
        double tn = grid.t(n), tn1 = grid.t(n + 1);
        double bn = barrier(tn), bn1 = barrier(tn1);
        if (n == 0 && opt.rannacher) {
            double tm = 0.5 * (tn + tn1);
            double bm = barrier(tm);
            stepper.step(cur, nxt, tn, tm, bn, bm, 1.0);
            stepper.step(nxt, nxt, tm, tn1, bm, bn1, 1.0);
        } else {
            stepper.step(cur, nxt, tn, tn1, bn, bn1, 0.5);
        }
        for (double v : nxt) min_seen = std::min(min_seen, v);
        if (min_seen < opt.negativity_tol)
            throw SolverError(Errc::nonpositive_density,
                              "density fell to " + std::to_string(min_seen));
        cur.swap(nxt);
        record(n + 1, cur);
    }
    res.min_density = min_seen;
    if (field) {
        field->check_finite();
        res.density = std::move(*field);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Monte Carlo

namespace {

// inverse-CDF sampler on a fine tabulation of the initial density
class InitialSampler {
public:
    explicit InitialSampler(const InitialDensity& u0) {
        if (u0.is_delta()) {
            delta_ = true;
            x0_ = u0.delta_x0;
            return;
        }
        const int n = 4096;
        double lo = u0.support_floor, hi = u0.support_ceiling;
        x_.resize(n + 1);
        cdf_.resize(n + 1);
        double h = (hi - lo) / n;
        cdf_[0] = 0.0;
        x_[0] = lo;
        double prev = u0(lo);
        for (int i = 1; i <= n; ++i) {
            x_[i] = lo + i * h;
            double vi = u0(x_[i]);
            cdf_[i] = cdf_[i - 1] + 0.5 * (prev + vi) * h;
            prev = vi;
        }
        for (double& c : cdf_) c /= cdf_.back();
    }

    template <class Rng>
    double operator()(Rng& rng) const {
        if (delta_) return x0_;
        std::uniform_real_distribution<double> u(0.0, 1.0);
        double q = u(rng);
        auto it = std::lower_bound(cdf_.begin(), cdf_.end(), q);
        std::size_t i = std::min<std::size_t>(
            std::max<std::ptrdiff_t>(1, it - cdf_.begin()), cdf_.size() - 1);
        double w = (q - cdf_[i - 1]) / std::max(1e-300, cdf_[i] - cdf_[i - 1]);
        return x_[i - 1] + w * (x_[i] - x_[i - 1]);
    }

private:
    bool delta_ = false;
    double x0_ = 0.0;
    std::vector<double> x_, cdf_;
};

struct ChunkSums {
    std::vector<double> s1, s2;
};

} // namespace

ForwardResult forward_mc(const DiffusionSpec& spec, const Boundary& barrier,
                         const McOptions& opt) {
    if (opt.n_paths < 1000)
        throw SolverError(Errc::invalid_paths, "need at least 10^3 paths");
    if (opt.n_steps < 1)
        throw SolverError(Errc::invalid_argument, "need at least one step");
    if (barrier.t.size() < 2)
        throw SolverError(Errc::invalid_argument, "barrier needs at least two knots");

    const double t_start = barrier.t.front(), t_end = barrier.t.back();
    const int ns = opt.n_steps;
    const double dt = (t_end - t_start) / ns;
    const double sqdt = std::sqrt(dt);

    std::vector<double> tk(ns + 1), bk(ns + 1);
    for (int k = 0; k <= ns; ++k) {
        tk[k] = t_start + k * dt;
        bk[k] = barrier(tk[k]);
    }

    InitialSampler sample(spec.initial_density);
    const CoeffFn mu = spec.mu, sigma = spec.sigma;

    const long chunk = std::max(1, opt.chunk_size);
    const long nchunks = (opt.n_paths + chunk - 1) / chunk;
    std::vector<ChunkSums> parts{std::size_t(nchunks)};

    auto run_chunk = [&](long c) {
        ChunkSums out;
        out.s1.assign(ns + 1, 0.0);
        out.s2.assign(ns + 1, 0.0);
        std::mt19937_64 rng(splitmix64(opt.seed + 0x9e3779b97f4a7c15ull * std::uint64_t(c + 1)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        const long lo = c * chunk;
        const long hi = std::min<long>(opt.n_paths, lo + chunk);
        for (long path = lo; path < hi; ++path) {
            double x = sample(rng);
            double w = 1.0;
            bool alive = true;
            if (std::isfinite(bk[0]) && x < bk[0]) { w = 0.0; alive = false; }
            out.s1[0] += w;
            out.s2[0] += w * w;
            for (int k = 0; k < ns; ++k) {
                if (alive) {
                    double sk = sigma(x, tk[k]);
                    double xn = x + mu(x, tk[k]) * dt + sk * sqdt * gauss(rng);
                    if (!std::isfinite(xn))
                        throw SolverError(Errc::nonfinite_path, "path diverged");
                    if (std::isfinite(bk[k + 1]) && xn < bk[k + 1]) {
                        w = 0.0;
                        alive = false;
                    } else if (std::isfinite(bk[k]) && std::isfinite(bk[k + 1])) {
                        // Brownian-bridge crossing correction between endpoints
                        double d0 = x - bk[k], d1 = xn - bk[k + 1];
                        w *= 1.0 - std::exp(-2.0 * d0 * d1 / (sk * sk * dt));
                    }
                    x = xn;
                }
                out.s1[k + 1] += w;
                out.s2[k + 1] += w * w;
            }
        }
        return out;
    };

    unsigned hw = opt.threads > 0 ? unsigned(opt.threads)
                                  : std::max(1u, std::thread::hardware_concurrency());
    hw = std::min<unsigned>(hw, 16);
    {
        std::atomic<long> next{0};
        std::vector<std::future<void>> pool;
        std::exception_ptr err;
        std::mutex err_mx;
        for (unsigned th = 0; th < hw; ++th) {
            pool.push_back(std::async(std::launch::async, [&]() {
                for (;;) {
                    long c = next.fetch_add(1);
                    if (c >= nchunks) return;
                    try {
                        parts[std::size_t(c)] = run_chunk(c);
                    } catch (...) {
                        std::lock_guard<std::mutex> g(err_mx);
                        if (!err) err = std::current_exception();
                        return;
                    }
                }
            }));
        }
        for (auto& f : pool) f.get();
        if (err) std::rethrow_exception(err);
    }

    ForwardResult res;
    res.method = "mc";
    res.t = tk;
    res.p.assign(ns + 1, 0.0);
    res.se.assign(ns + 1, 0.0);
    const double N = double(opt.n_paths);
    for (int k = 0; k <= ns; ++k) {
        double s1 = 0.0, s2 = 0.0;
        for (long c = 0; c < nchunks; ++c) { // fixed reduction order
            s1 += parts[std::size_t(c)].s1[k];
            s2 += parts[std::size_t(c)].s2[k];
        }
        double mean = s1 / N;
        double var = std::max(0.0, s2 / N - mean * mean);
        res.p[k] = mean;
        res.se[k] = std::sqrt(var / N);
    }
    return res;
}

} // namespace ifp
