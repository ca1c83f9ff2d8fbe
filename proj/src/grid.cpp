#include "ifp/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ifp {

const char* field_kind_name(FieldKind k) {
    switch (k) {
    case FieldKind::distribution: return "distribution";
    case FieldKind::density: return "density";
    case FieldKind::scaled_density: return "scaled_density";
    case FieldKind::scaling: return "scaling";
    default: return "other";
    }
}

SpaceTimeGrid SpaceTimeGrid::make(double x_min, double x_max, int nx,
                                  double t0, double t1, int nt) {
    if (!(x_min < x_max) || !(t0 < t1))
        throw SolverError(Errc::invalid_argument, "grid extents must be increasing");
    if (nx < 8 || nt < 8)
        throw SolverError(Errc::invalid_argument, "grid needs at least 8 cells/steps per axis");
    SpaceTimeGrid g;
    g.x_min = x_min; g.x_max = x_max; g.nx = nx;
    g.t0 = t0; g.t1 = t1; g.nt = nt;
    return g;
}

int SpaceTimeGrid::floor_index(double xq) const {
    if (xq < x_min) return -1;
    if (xq >= x_max) return nx;
    int j = int((xq - x_min) / dx());
    // guard against rounding at cell edges
    while (j > 0 && x(j) > xq) --j;
    while (j < nx && x(j + 1) <= xq) ++j;
    return j;
}

Field::Field(SpaceTimeGrid g, FieldKind kind)
    : grid_(g), kind_(kind), vals_(std::size_t(g.nx + 1) * (g.nt + 1), 0.0) {}

Field::Field(SpaceTimeGrid g, FieldKind kind,
             const std::function<double(double, double)>& f)
    : Field(g, kind) {
    for (int n = 0; n <= g.nt; ++n)
        for (int j = 0; j <= g.nx; ++j)
            at(j, n) = f(g.x(j), g.t(n));
    check_finite();
}

double Field::min() const { return *std::min_element(vals_.begin(), vals_.end()); }
double Field::max() const { return *std::max_element(vals_.begin(), vals_.end()); }

void Field::check_finite() const {
    for (double v : vals_)
        if (!std::isfinite(v))
            throw SolverError(Errc::invalid_argument, "field contains non-finite entries");
}

namespace {

// 1-d stencil application along a line of m points with spacing h.
// get(i) reads the input, put(i, v) writes the derivative.
template <class Get, class Put>
void line_derivative(int m, double h, int order, StencilSide side, Get get, Put put) {
    if (order == 1) {
        const int need = 3;
        if (m < need) throw SolverError(Errc::stencil_overrun, "line too short for 3-point stencil");
        for (int i = 0; i < m; ++i) {
            bool fwd_ok = i + 2 < m, bwd_ok = i - 2 >= 0;
            StencilSide s = side;
            if (s == StencilSide::central && (i == 0 || i == m - 1))
                s = (i == 0) ? StencilSide::forward : StencilSide::backward;
            if (s == StencilSide::forward && !fwd_ok) s = StencilSide::backward;
            if (s == StencilSide::backward && !bwd_ok) s = StencilSide::forward;
            double v;
            switch (s) {
            case StencilSide::central:
                v = (get(i + 1) - get(i - 1)) / (2 * h);
                break;
            case StencilSide::forward:
                v = (-3 * get(i) + 4 * get(i + 1) - get(i + 2)) / (2 * h);
                break;
            default:
                v = (3 * get(i) - 4 * get(i - 1) + get(i - 2)) / (2 * h);
            }
            put(i, v);
        }
    } else { // order == 2
        if (m < 4) throw SolverError(Errc::stencil_overrun, "line too short for second derivative");
        for (int i = 0; i < m; ++i) {
            bool fwd4 = i + 3 < m, bwd4 = i - 3 >= 0;
            StencilSide s = side;
            if (s == StencilSide::central && (i == 0 || i == m - 1))
                s = (i == 0) ? StencilSide::forward : StencilSide::backward;
            if (s == StencilSide::forward && !fwd4 && i + 2 >= m) s = StencilSide::backward;
            if (s == StencilSide::backward && !bwd4 && i - 2 < 0) s = StencilSide::forward;
            double v;
            if (s == StencilSide::central) {
                v = (get(i + 1) - 2 * get(i) + get(i - 1)) / (h * h);
            } else if (s == StencilSide::forward) {
                v = fwd4 ? (2 * get(i) - 5 * get(i + 1) + 4 * get(i + 2) - get(i + 3)) / (h * h)
                         : (get(i) - 2 * get(i + 1) + get(i + 2)) / (h * h); // 3-point edge
            } else {
                v = bwd4 ? (2 * get(i) - 5 * get(i - 1) + 4 * get(i - 2) - get(i - 3)) / (h * h)
                         : (get(i) - 2 * get(i - 1) + get(i - 2)) / (h * h);
            }
            put(i, v);
        }
    }
}

} // namespace

Field fd_derivative(const Field& f, Axis axis, int order, StencilSide side) {
    if (order != 1 && order != 2)
        throw SolverError(Errc::invalid_argument, "derivative order must be 1 or 2");
    const SpaceTimeGrid& g = f.grid();
    Field out(g, FieldKind::other);
    if (axis == Axis::x) {
        for (int n = 0; n <= g.nt; ++n) {
            line_derivative(g.x_nodes(), g.dx(), order, side,
                            [&](int j) { return f.at(j, n); },
                            [&](int j, double v) { out.at(j, n) = v; });
        }
    } else {
        for (int j = 0; j <= g.nx; ++j) {
            line_derivative(g.t_nodes(), g.dt(), order, side,
                            [&](int n) { return f.at(j, n); },
                            [&](int n, double v) { out.at(j, n) = v; });
        }
    }
    return out;
}

double integrate_mass(const Field& f, int t_index, double lower_x) {
    return integrate_mass(f, t_index, lower_x, f.grid().x_max);
}

double integrate_mass(const Field& f, int t_index, double lower_x, double upper_x) {
    const SpaceTimeGrid& g = f.grid();
    if (t_index < 0 || t_index > g.nt)
        throw SolverError(Errc::out_of_domain, "time index outside grid");
    return integrate_slice(f.slice(t_index), g, lower_x, upper_x);
}

double integrate_slice(std::span<const double> slice, const SpaceTimeGrid& g,
                       double lower_x, double upper_x) {
    double a = std::max(lower_x, g.x_min);
    double b = std::min(upper_x, g.x_max);
    if (a >= b) return 0.0;

    auto value_at = [&](double x) {
        int j = g.floor_index(x);
        if (j >= g.nx) return slice[std::size_t(g.nx)];
        double s = (x - g.x(j)) / g.dx();
        return (1 - s) * slice[std::size_t(j)] + s * slice[std::size_t(j) + 1];
    };

    const double dx = g.dx();
    int ja = g.floor_index(a);
    int jb = g.floor_index(b);
    if (jb >= g.nx) jb = g.nx - 1; // b lies in cell [jb, jb+1] or at x_max

    if (ja == jb) // both endpoints inside one cell
        return 0.5 * (value_at(a) + value_at(b)) * (b - a);

    double total = 0.0;
    // partial cell on the left
    total += 0.5 * (value_at(a) + slice[std::size_t(ja) + 1]) * (g.x(ja + 1) - a);
    // full interior cells
    for (int j = ja + 1; j < jb; ++j)
        total += 0.5 * (slice[std::size_t(j)] + slice[std::size_t(j) + 1]) * dx;
    // partial cell on the right
    total += 0.5 * (slice[std::size_t(jb)] + value_at(b)) * (b - g.x(jb));
    return total;
}

double interp_slice(const Field& f, int n, double x) {
    const SpaceTimeGrid& g = f.grid();
    if (x < g.x_min - 1e-12 * (g.x_max - g.x_min) || x > g.x_max + 1e-12 * (g.x_max - g.x_min))
        throw SolverError(Errc::out_of_domain, "x outside grid");
    x = std::clamp(x, g.x_min, g.x_max);
    int j = g.floor_index(x);
    if (j >= g.nx) return f.at(g.nx, n);
    double s = (x - g.x(j)) / g.dx();
    return (1 - s) * f.at(j, n) + s * f.at(j + 1, n);
}

double interp(const Field& f, double x, double t) {
    const SpaceTimeGrid& g = f.grid();
    double tol_x = 1e-12 * (g.x_max - g.x_min), tol_t = 1e-12 * (g.t1 - g.t0);
    if (x < g.x_min - tol_x || x > g.x_max + tol_x || t < g.t0 - tol_t || t > g.t1 + tol_t)
        throw SolverError(Errc::out_of_domain, "(x,t) outside grid rectangle");
    x = std::clamp(x, g.x_min, g.x_max);
    t = std::clamp(t, g.t0, g.t1);
    int n = int((t - g.t0) / g.dt());
    if (n >= g.nt) n = g.nt - 1;
    while (n > 0 && g.t(n) > t) --n;
    double r = (t - g.t(n)) / g.dt();
    double lo = interp_slice(f, n, x);
    double hi = interp_slice(f, n + 1, x);
    return (1 - r) * lo + r * hi;
}

} // namespace ifp
