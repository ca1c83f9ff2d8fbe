#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ifp/forward.hpp"
#include "ifp/inverse.hpp"
#include "ifp/special.hpp"

using namespace ifp;
using namespace ifp::test;

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

ReducedSpec xexp_reduced() {
    auto spec = brownian_spec(kSqrt2, 0.0, xexp_density(), -9.0, 28.0);
    return sigma_reduce(spec, 1.0);
}

SpaceTimeGrid coarse_grid() {
    return SpaceTimeGrid::make(-9.0, 28.0, 1850, 0.0, 1.0, 500);
}

} // namespace

TEST_CASE("baseline distribution of Brownian motion") {
    auto spec = brownian_spec(kSqrt2, 0.0, InitialDensity::delta(0.0), -8.0, 8.0);
    auto r = sigma_reduce(spec, 1.0);
    auto grid = SpaceTimeGrid::make(-9.0, 9.0, 3600, 0.05, 1.0, 950);
    Field w0 = baseline_distribution(r, grid);

    // symmetry: w0(0,t) = 1/2
    int j0 = int(std::lround((0.0 - grid.x_min) / grid.dx()));
    for (int n = 0; n <= grid.nt; n += 20)
        CHECK(w0.at(j0, n) == doctest::Approx(0.5).epsilon(2e-6));

    // w0(x,t) = 1 - Phi(x / sqrt(2 t)) at sampled nodes
    double worst = 0.0;
    for (int n = 10; n <= grid.nt; n += 25) {
        double t = grid.t(n);
        for (int j = 0; j <= grid.nx; j += 37) {
            double oracle = norm_sf(grid.x(j) / std::sqrt(2.0 * t));
            worst = std::max(worst, std::abs(w0.at(j, n) - oracle));
        }
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("baseline initial slice matches the density tail integral") {
    auto r = xexp_reduced();
    auto grid = coarse_grid();
    Field w0 = baseline_distribution(r, grid);
    for (int j = 0; j <= grid.nx; j += 41) {
        double x = grid.x(j);
        double oracle = x <= 0 ? 1.0 : (1.0 + x) * std::exp(-x); // tail of x e^{-x}
        CHECK(w0.at(j, 0) == doctest::Approx(oracle).epsilon(1e-7));
    }
}

TEST_CASE("flat curve leaves the baseline untouched and extracts -inf") {
    auto r = xexp_reduced();
    auto grid = coarse_grid();
    auto curve = flat_curve(1.0, 20);
    Field w0 = baseline_distribution(r, grid);

    PenaltyConfig cfg = PenaltyConfig::with_schedule(1e-1, 4.0, 1e-1); // single level
    LevelReport lr;
    Field w = solve_penalized(curve, r, grid, 1e-1, cfg, w0, nullptr, &lr);
    double worst = 0.0;
    for (int n = 0; n <= grid.nt; n += 10)
        for (int j = 0; j <= grid.nx; ++j)
            worst = std::max(worst, std::abs(w.at(j, n) - w0.at(j, n)));
    CHECK(worst < 1e-9); // penalty never activates since w0 <= 1 = p

    auto sol = epsilon_continuation(curve, r, grid, cfg);
    CHECK(sol.b.all_infinite());
}

TEST_CASE("large eps reproduces the baseline") {
    auto r = xexp_reduced();
    auto grid = coarse_grid();
    auto curve = exp_curve(1.0, 1.0, 500);
    Field w0 = baseline_distribution(r, grid);
    PenaltyConfig cfg;
    cfg.eps_schedule = {4.0};
    LevelReport lr;
    Field w = solve_penalized(curve, r, grid, 4.0, cfg, w0, nullptr, &lr);
    // beta((w-p)/eps) <= m/64 for w-p <= eps/4: with eps = 4 the reaction is
    // tiny wherever w-p <= 1, which holds everywhere since w <= 1
    double worst = 0.0;
    for (int n = 0; n <= grid.nt; n += 25)
        for (int j = 0; j <= grid.nx; ++j)
            worst = std::max(worst, std::abs(w.at(j, n) - w0.at(j, n)));
    CHECK(worst < 2e-2);
}

TEST_CASE("penalized solve honors the comparison bounds") {
    auto r = xexp_reduced();
    auto grid = coarse_grid();
    auto curve = exp_curve(1.0, 1.0, 500);
    Field w0 = baseline_distribution(r, grid);
    PenaltyConfig cfg;
    cfg.eps_schedule = {1e-3};
    LevelReport lr;
    Field warm = solve_penalized(curve, r, grid, 2e-2, cfg, w0, nullptr, &lr);
    Field w = solve_penalized(curve, r, grid, 1e-3, cfg, w0, &warm, &lr);

    double max_above_p = -1.0;
    double max_above_w0 = -1.0;
    double min_w = 1.0;
    for (int n = 0; n <= grid.nt; ++n) {
        double p = curve.p(grid.t(n));
        for (int j = 0; j <= grid.nx; ++j) {
            max_above_p = std::max(max_above_p, w.at(j, n) - p);
            max_above_w0 = std::max(max_above_w0, w.at(j, n) - w0.at(j, n));
            min_w = std::min(min_w, w.at(j, n));
        }
    }
    CHECK(max_above_p <= 1e-3 * (1 + 1e-6)); // w <= p + eps
    CHECK(max_above_w0 <= 1e-10);
    CHECK(min_w >= -1e-10);

    // discrete penalty residual stays inside [0, m]
    Field res = penalty_residual(w, w0, r, grid);
    CHECK(res.min() >= -1e-8);
    CHECK(res.max() <= curve.sup_abs_pdot() + 1e-8);
}

TEST_CASE("continuation converges and the boundary round-trips") {
    auto r = xexp_reduced();
    auto grid = coarse_grid();
    auto curve = exp_curve(1.0, 1.0, 500);
    PenaltyConfig cfg = PenaltyConfig::with_schedule(1e-1, 4.0, 1e-3);
    auto sol = epsilon_continuation(curve, r, grid, cfg);

    // successive differences decrease along the schedule
    for (std::size_t k = 2; k < sol.report.levels.size(); ++k)
        CHECK(sol.report.levels[k].diff_prev < sol.report.levels[k - 1].diff_prev);

    // boundary is finite on the interior window and not wild
    for (int n = 0; n <= grid.nt; ++n) {
        double t = grid.t(n);
        if (t < 0.1) continue;
        CHECK(std::isfinite(sol.b.b[n]));
        CHECK(sol.b.b[n] > -2.0);
        CHECK(sol.b.b[n] < 3.0);
    }

    // round trip: forward solve on the extracted boundary reproduces p
    auto fwd = forward_pde(r, sol.b, grid);
    double err = fwd.sup_error_against(curve);
    CHECK(err < 2e-2);

    // boundary-value consistency at finite knots
    double theta = sol.report.theta;
    for (int n = 0; n <= grid.nt; n += 50) {
        if (!std::isfinite(sol.b.b[n])) continue;
        double wb = interp(sol.w, sol.b.b[n], grid.t(n));
        CHECK(std::abs(wb - curve.p(grid.t(n))) <= theta + 2.0 * grid.dx());
    }
}

TEST_CASE("extract_boundary on synthetic fields") {
    auto grid = SpaceTimeGrid::make(-2.0, 2.0, 400, 0.0, 1.0, 10);
    auto curve = exp_curve(0.5, 1.0, 10);

    SUBCASE("kink profile recovers the corner") {
        const double c = -0.5;
        Field w(grid, FieldKind::distribution, [&](double x, double t) {
            double p = std::exp(-0.5 * t);
            return std::min(p, p - (x - c));
        });
        Boundary b = extract_boundary(w, curve, 1e-4);
        for (std::size_t i = 0; i < b.b.size(); ++i)
            CHECK(std::abs(b.b[i] - c) <= grid.dx());
    }

    SUBCASE("strictly sub-p field gives -inf") {
        Field w(grid, FieldKind::distribution, [&](double x, double t) {
            return (1.0 - 1e-8) * std::exp(-0.5 * t) * norm_sf(x);
        });
        Boundary b = extract_boundary(w, curve, 1e-4);
        CHECK(b.all_infinite());
    }
}

TEST_CASE("grid refinement moves the boundary by less than the previous change") {
    auto r = xexp_reduced();
    auto curve = exp_curve(1.0, 1.0, 500);
    PenaltyConfig cfg = PenaltyConfig::with_schedule(1e-1, 4.0, 4e-3);

    auto g1 = SpaceTimeGrid::make(-9.0, 28.0, 925, 0.0, 1.0, 125);
    auto g2 = SpaceTimeGrid::make(-9.0, 28.0, 1850, 0.0, 1.0, 250);
    auto g3 = SpaceTimeGrid::make(-9.0, 28.0, 3700, 0.0, 1.0, 500);
    auto s1 = epsilon_continuation(curve, r, g1, cfg);
    auto s2 = epsilon_continuation(curve, r, g2, cfg);
    auto s3 = epsilon_continuation(curve, r, g3, cfg);

    auto sup_diff = [](const Boundary& a, const Boundary& c) {
        double worst = 0.0;
        for (std::size_t i = 0; i < a.t.size(); ++i) {
            if (a.t[i] < 0.15) continue;
            double va = a.b[i], vc = c(a.t[i]);
            if (std::isfinite(va) && std::isfinite(vc))
                worst = std::max(worst, std::abs(va - vc));
        }
        return worst;
    };
    double d12 = sup_diff(s1.b, s2.b);
    double d23 = sup_diff(s2.b, s3.b);
    CHECK(d23 <= 2.0 * d12);
}
