#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "ifp/grid.hpp"
#include "ifp/special.hpp"

using namespace ifp;

TEST_CASE("grid construction invariants") {
    CHECK_THROWS_AS(SpaceTimeGrid::make(0, 1, 4, 0, 1, 8), SolverError);
    CHECK_THROWS_AS(SpaceTimeGrid::make(1, 0, 8, 0, 1, 8), SolverError);
    auto g = SpaceTimeGrid::make(-1, 3, 16, 0, 2, 8);
    CHECK(g.dx() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.dt() == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(g.x(16) == doctest::Approx(3.0));
}

TEST_CASE("fd_derivative exact on quadratics and constants") {
    auto g = SpaceTimeGrid::make(-2, 2, 32, 0, 1, 8);
    Field f2(g, FieldKind::other, [](double x, double) { return x * x; });
    Field d2 = fd_derivative(f2, Axis::x, 2);
    for (int n = 0; n <= g.nt; ++n)
        for (int j = 0; j <= g.nx; ++j)
            CHECK(d2.at(j, n) == doctest::Approx(2.0).epsilon(1e-10));

    Field fc(g, FieldKind::other, [](double, double) { return 7.25; });
    Field dc1 = fd_derivative(fc, Axis::x, 1);
    Field dc2 = fd_derivative(fc, Axis::x, 2);
    CHECK(dc1.max() == 0.0);
    CHECK(dc1.min() == 0.0);
    CHECK(dc2.max() == 0.0);

    // affine field: first derivative recovers the slope exactly
    Field fa(g, FieldKind::other, [](double x, double t) { return 3.5 * x - 0.25 * t; });
    Field da = fd_derivative(fa, Axis::x, 1);
    Field dat = fd_derivative(fa, Axis::t, 1);
    for (int n = 0; n <= g.nt; ++n)
        for (int j = 0; j <= g.nx; ++j) {
            CHECK(da.at(j, n) == doctest::Approx(3.5).epsilon(1e-12));
            CHECK(dat.at(j, n) == doctest::Approx(-0.25).epsilon(1e-12));
        }
}

TEST_CASE("fd_derivative of sin tracks cos within c*h^2") {
    // dx = 1e-2; documented constant c = 1 covers both the interior
    // central stencil (h^2/6) and the one-sided edges (h^2/3)
    auto g = SpaceTimeGrid::make(0, 4, 400, 0, 1, 8);
    Field f(g, FieldKind::other, [](double x, double) { return std::sin(x); });
    Field d = fd_derivative(f, Axis::x, 1);
    double worst = 0;
    for (int j = 0; j <= g.nx; ++j)
        worst = std::max(worst, std::abs(d.at(j, 0) - std::cos(g.x(j))));
    CHECK(worst <= 1e-4 * 1.0);
}

TEST_CASE("integrate_mass basics") {
    auto g = SpaceTimeGrid::make(-8, 8, 1600, 0, 1, 8);
    Field zero(g, FieldKind::density);
    CHECK(integrate_mass(zero, 0, -8.0) == 0.0);

    Field gauss(g, FieldKind::density, [](double x, double) { return norm_pdf(x); });
    double total = integrate_mass(gauss, 0, -8.0);
    double oracle = norm_cdf(8.0) - norm_cdf(-8.0); // error-function evaluation
    CHECK(std::abs(total - oracle) < 1e-6);

    CHECK(integrate_mass(gauss, 0, 8.0) == 0.0);          // lower at x_max
    CHECK(integrate_mass(gauss, 0, -100.0) == doctest::Approx(total)); // clamped
}

TEST_CASE("integrate_mass additive over disjoint intervals") {
    auto g = SpaceTimeGrid::make(-3, 5, 64, 0, 1, 8);
    Field f(g, FieldKind::density, [](double x, double t) { return std::exp(-x * x) + 0.1 * t; });
    std::mt19937 rng(991);
    std::uniform_real_distribution<double> u(-3.0, 5.0);
    for (int trial = 0; trial < 100; ++trial) {
        double a = u(rng), c = u(rng);
        if (a > c) std::swap(a, c);
        double whole = integrate_mass(f, 3, a);
        double split = integrate_mass(f, 3, a, c) + integrate_mass(f, 3, c);
        CHECK(std::abs(whole - split) < 1e-12);
    }
}

TEST_CASE("interp bilinear") {
    auto g = SpaceTimeGrid::make(0, 1, 8, 0, 1, 8);
    Field f(g, FieldKind::other, [](double x, double t) { return x * t; });

    // nodal points reproduce nodal values
    CHECK(interp(f, g.x(3), g.t(5)) == f.at(3, 5));

    // affine is reproduced exactly at a cell center
    Field fa(g, FieldKind::other, [](double x, double t) { return x + t; });
    CHECK(interp(fa, 0.5625, 0.3125) == doctest::Approx(0.5625 + 0.3125).epsilon(1e-15));

    // product field at the center of cell [0.5,0.625]x[0.25,0.375]:
    // bilinear average of the four corners = product of the midpoints
    double xc = 0.5625, tc = 0.3125;
    CHECK(interp(f, xc, tc) == doctest::Approx(xc * tc).epsilon(1e-15));

    CHECK_THROWS_AS(interp(f, -0.5, 0.5), SolverError);
    CHECK_THROWS_AS(interp(f, 0.5, 1.5), SolverError);
}

TEST_CASE("interp monotone along monotone axes") {
    auto g = SpaceTimeGrid::make(0, 2, 16, 0, 1, 8);
    Field f(g, FieldKind::other, [](double x, double t) { return std::atan(2 * x) + t * t; });
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> ux(0.0, 2.0), ut(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        double x1 = ux(rng), x2 = ux(rng), t = ut(rng);
        if (x1 > x2) std::swap(x1, x2);
        CHECK(interp(f, x1, t) <= interp(f, x2, t) + 1e-14);
    }
}
