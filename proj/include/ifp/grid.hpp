#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ifp/errors.hpp"

namespace ifp {

/// Uniform space-time grid: nx cells in x, nt steps in t.
/// Node (j, n) sits at (x_min + j*dx, t0 + n*dt).
struct SpaceTimeGrid {
    double x_min = 0.0, x_max = 1.0;
    int nx = 8;
    double t0 = 0.0, t1 = 1.0;
    int nt = 8;

    static SpaceTimeGrid make(double x_min, double x_max, int nx,
                              double t0, double t1, int nt);

    double dx() const { return (x_max - x_min) / nx; }
    double dt() const { return (t1 - t0) / nt; }
    int x_nodes() const { return nx + 1; }
    int t_nodes() const { return nt + 1; }
    double x(int j) const { return x_min + j * dx(); }
    double t(int n) const { return t0 + n * dt(); }

    // index of the last node with x(j) <= xq, clamped to [-1, nx]
    int floor_index(double xq) const;

    bool same_shape(const SpaceTimeGrid& o) const {
        return nx == o.nx && nt == o.nt && x_min == o.x_min && x_max == o.x_max
            && t0 == o.t0 && t1 == o.t1;
    }
};

enum class FieldKind { distribution, density, scaled_density, scaling, other };

const char* field_kind_name(FieldKind k);

/// Scalar function sampled on a SpaceTimeGrid. Time slices are contiguous.
class Field {
public:
    Field() = default;
    Field(SpaceTimeGrid g, FieldKind kind);
    Field(SpaceTimeGrid g, FieldKind kind,
          const std::function<double(double, double)>& f); // f(x,t), finiteness checked

    const SpaceTimeGrid& grid() const { return grid_; }
    FieldKind kind() const { return kind_; }

    double& at(int j, int n) { return vals_[std::size_t(n) * (grid_.nx + 1) + j]; }
    double at(int j, int n) const { return vals_[std::size_t(n) * (grid_.nx + 1) + j]; }

    std::span<double> slice(int n) {
        return {vals_.data() + std::size_t(n) * (grid_.nx + 1), std::size_t(grid_.nx + 1)};
    }
    std::span<const double> slice(int n) const {
        return {vals_.data() + std::size_t(n) * (grid_.nx + 1), std::size_t(grid_.nx + 1)};
    }

    double min() const;
    double max() const;
    void check_finite() const; // throws invalid_argument on NaN/Inf

private:
    SpaceTimeGrid grid_;
    FieldKind kind_ = FieldKind::other;
    std::vector<double> vals_;
};

enum class Axis { x, t };
enum class StencilSide { central, forward, backward };

/// Finite-difference derivative of a field along one axis.
/// Interior stencils are second-order; edges fall back to one-sided
/// 3-point stencils. order in {1,2}.
Field fd_derivative(const Field& f, Axis axis, int order,
                    StencilSide side = StencilSide::central);

/// Trapezoid integral of slice n over [lower_x, upper_x] (default to
/// x_max), with linear sub-cell treatment of both endpoints. lower_x
/// below the grid is clamped to x_min (covers the -inf barrier case).
double integrate_mass(const Field& f, int t_index, double lower_x);
double integrate_mass(const Field& f, int t_index, double lower_x, double upper_x);
double integrate_slice(std::span<const double> slice, const SpaceTimeGrid& g,
                       double lower_x, double upper_x);

/// Bilinear interpolation; exact on nodes. Throws OutOfDomain.
double interp(const Field& f, double x, double t);

/// Linear interpolation along the slice at time index n.
double interp_slice(const Field& f, int n, double x);

} // namespace ifp
