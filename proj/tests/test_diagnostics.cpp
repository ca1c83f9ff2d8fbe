#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "ifp/diagnostics.hpp"
#include "ifp/special.hpp"

using namespace ifp;
using namespace ifp::test;

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;

// linear survival curve: pdot constant, so the synthetic ratio field is
// constant in time and the weak bounds collapse onto the residual
SurvivalCurve linear_curve(double c, double T, int n) {
    std::vector<double> t(n + 1), p(n + 1), pd(n + 1);
    for (int i = 0; i <= n; ++i) {
        t[i] = T * i / n;
        p[i] = 1.0 - c * t[i];
        pd[i] = -c;
    }
    return validate_p0(t, p, pd, 1);
}

} // namespace

TEST_CASE("fb_residual vanishes on the synthetic linear profile") {
    auto grid = SpaceTimeGrid::make(-2.0, 2.0, 200, 0.0, 0.5, 50);
    const double c = 0.6;
    auto curve = linear_curve(c, 0.5, 50);
    Boundary b = const_boundary(-0.7, 0.0, 0.5);
    // u = -pdot (x - b) for x >= b: sigma^2 u_x = 2c = -2 pdot exactly
    Field u(grid, FieldKind::density, [&](double x, double) {
        return std::max(0.0, c * (x + 0.7));
    });
    auto spec = brownian_spec(kSqrt2, 0.0, InitialDensity::delta(0.0));
    auto r = sigma_reduce(spec, 0.5);

    auto fb = fb_residual(u, b, curve, r);
    REQUIRE(!fb.skipped);
    for (double v : fb.absolute.value)
        CHECK(std::abs(v) < 1e-12);

    auto weak = weak_fb_bounds(u, b, curve, std::vector<double>{0.2, 0.1, 0.05},
                               std::vector<double>{0.25, 0.4});
    for (const auto& w : weak) {
        CHECK(w.straddle);
        // both bounds equal -2 pdot in the linear case
        CHECK(w.inf_ratio.back() == doctest::Approx(2.0 * c).epsilon(1e-12));
        CHECK(w.sup_ratio.back() == doctest::Approx(2.0 * c).epsilon(1e-12));
        // intervals nest as delta shrinks
        for (std::size_t k = 1; k < w.delta.size(); ++k) {
            CHECK(w.inf_ratio[k] >= w.inf_ratio[k - 1] - 1e-14);
            CHECK(w.sup_ratio[k] <= w.sup_ratio[k - 1] + 1e-14);
        }
    }
}

TEST_CASE("fb_residual skips when the boundary is -inf") {
    auto grid = SpaceTimeGrid::make(-2.0, 2.0, 64, 0.0, 0.5, 16);
    auto curve = flat_curve(0.5, 8);
    Field u(grid, FieldKind::density, [](double, double) { return 0.1; });
    auto spec = brownian_spec(kSqrt2, 0.0, InitialDensity::delta(0.0));
    auto r = sigma_reduce(spec, 0.5);
    auto fb = fb_residual(u, inf_boundary(0.0, 0.5), curve, r);
    CHECK(fb.skipped);
}

TEST_CASE("holder exponent estimates") {
    SUBCASE("square root is exactly 1/2") {
        Boundary b;
        for (int i = 0; i <= 1024; ++i) {
            b.t.push_back(i / 1024.0);
            b.b.push_back(std::sqrt(b.t.back()));
        }
        auto est = holder_estimate(b, 0.0, 1.0, 4.0 / 1024, 1.0 / 8);
        CHECK(std::abs(est.alpha - 0.5) < 0.05);
    }
    SUBCASE("affine reports capped near one") {
        Boundary b;
        for (int i = 0; i <= 512; ++i) {
            b.t.push_back(i / 512.0);
            b.b.push_back(-0.3 + 1.7 * b.t.back());
        }
        auto est = holder_estimate(b, 0.0, 1.0, 4.0 / 512, 1.0 / 8);
        CHECK(est.alpha >= 0.95);
    }
    SUBCASE("flat boundary is degenerate") {
        Boundary b = const_boundary(0.5, 0.0, 1.0, 128);
        CHECK_THROWS_AS(holder_estimate(b, 0.0, 1.0, 4.0 / 128, 1.0 / 8), SolverError);
    }
    SUBCASE("invariant under value scaling") {
        Boundary b, b2;
        for (int i = 0; i <= 256; ++i) {
            double t = i / 256.0;
            double v = std::sqrt(t) + 0.2 * std::sin(8 * t);
            b.t.push_back(t);
            b.b.push_back(v);
            b2.t.push_back(t);
            b2.b.push_back(2.0 * v);
        }
        auto e1 = holder_estimate(b, 0.0, 1.0, 4.0 / 256, 1.0 / 8);
        auto e2 = holder_estimate(b2, 0.0, 1.0, 4.0 / 256, 1.0 / 8);
        CHECK(std::abs(e1.alpha - e2.alpha) < 1e-10);
    }
}

TEST_CASE("sign change counting") {
    auto grid = SpaceTimeGrid::make(-4.0, 4.0, 256, 0.0, 1.0, 8);
    Boundary b = const_boundary(-3.5, 0.0, 1.0);

    SUBCASE("bell-shaped slice has one root") {
        Field v(grid, FieldKind::scaled_density, [](double x, double t) {
            return norm_pdf(x - 0.2 * t);
        });
        auto series = sign_changes(v, b);
        for (double n : series.value) CHECK(n == 1.0);
    }
    SUBCASE("monotone slice has none") {
        Field v(grid, FieldKind::scaled_density, [](double x, double) {
            return std::tanh(x) + 1.5;
        });
        auto series = sign_changes(v, b);
        for (double n : series.value) CHECK(n == 0.0);
    }
    SUBCASE("invariant under positive scaling") {
        Field v(grid, FieldKind::scaled_density, [](double x, double t) {
            return norm_pdf(x) * (1.0 + 0.3 * std::sin(5 * x + t));
        });
        Field v2 = v;
        for (int n = 0; n <= grid.nt; ++n)
            for (int j = 0; j <= grid.nx; ++j)
                v2.at(j, n) *= 37.5;
        auto s1 = sign_changes(v, b);
        auto s2 = sign_changes(v2, b);
        CHECK(s1.value == s2.value);
    }
}

TEST_CASE("round trip on the flat curve is exact") {
    auto spec = brownian_spec(kSqrt2, 0.0, xexp_density(), -9.0, 28.0);
    auto r = sigma_reduce(spec, 1.0);
    auto grid = SpaceTimeGrid::make(-9.0, 28.0, 925, 0.0, 1.0, 250);
    auto curve = flat_curve(1.0, 16);

    RoundTripOptions opt;
    opt.penalty = PenaltyConfig::with_schedule(1e-1, 4.0, 1e-1);
    opt.mc.n_paths = 2000;
    opt.mc.n_steps = 64;
    auto rt = round_trip(curve, spec, r, grid, opt);

    CHECK(rt.inverse.b.all_infinite());
    CHECK(rt.err_pde < 1e-8);
    CHECK(rt.err_mc == 0.0);
    CHECK(rt.report.all_pass());
}

TEST_CASE("round trip recovers a constant barrier from its closed form") {
    // survival of sqrt(2)-Brownian motion above a = -1, fed back through the
    // inverse solver: the extracted boundary must sit near the constant
    const double a = -1.0;
    auto spec = brownian_spec(kSqrt2, 0.0, InitialDensity::delta(0.0), -9.0, 10.0);
    auto r = sigma_reduce(spec, 1.0);

    const int nk = 800;
    std::vector<double> t(nk + 1), p(nk + 1), pd(nk + 1);
    t[0] = 0.0; p[0] = 1.0; pd[0] = 0.0;
    for (int i = 1; i <= nk; ++i) {
        t[i] = i / double(nk);
        double z = std::abs(a) / std::sqrt(2.0 * t[i]);
        p[i] = 2.0 * norm_cdf(z) - 1.0;
        pd[i] = -norm_pdf(z) * std::abs(a) / (std::sqrt(2.0) * std::pow(t[i], 1.5));
    }
    auto curve = validate_p0(t, p, pd, 3);

    auto grid = SpaceTimeGrid::make(-9.0, 10.0, 1900, 0.01, 1.0, 495);
    PenaltyConfig cfg = PenaltyConfig::with_schedule(1e-1, 4.0, 1e-3);
    auto sol = epsilon_continuation(curve, r, grid, cfg);

    double worst = 0.0;
    for (std::size_t i = 0; i < sol.b.t.size(); ++i) {
        if (sol.b.t[i] < 0.15) continue;
        CHECK(std::isfinite(sol.b.b[i]));
        if (std::isfinite(sol.b.b[i]))
            worst = std::max(worst, std::abs(sol.b.b[i] - a));
    }
    CHECK(worst <= 5 * grid.dx());
}
