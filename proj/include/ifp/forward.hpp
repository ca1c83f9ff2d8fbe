#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ifp/grid.hpp"
#include "ifp/model.hpp"

namespace ifp {

/// Survival estimate from one forward solver.
struct ForwardResult {
    std::vector<double> t;
    std::vector<double> p;
    std::vector<double> se;          // MC only
    std::optional<Field> density;    // PDE only, when requested
    std::string method;              // "pde" or "mc"

    double normalization = 1.0;      // trapezoid factor applied to the initial slice
    double warmstart_tail = 0.0;     // barrier-truncation error of the analytic start
    double min_density = 0.0;

    double sup_error_against(const SurvivalCurve& curve) const;
};

struct PdeOptions {
    bool store_field = false;
    bool rannacher = true;           // two implicit-Euler half steps at startup
    double negativity_tol = -1e-10;
};

/// Absorbing-boundary solve of the survival density above the barrier;
/// p_hat(t) is the remaining mass above b(t). The spec must be
/// volatility-reduced; a point-mass initial law requires grid.t0 > 0
/// (analytic Gaussian warm start at t0).
ForwardResult forward_pde(const ReducedSpec& spec, const Boundary& barrier,
                          const SpaceTimeGrid& grid, const PdeOptions& opt = {});

/// Warm-start time for a point mass at x0: largest t0 with
/// P(barrier hit before t0) below tail_tol, capped by `cap`.
double delta_warmstart_time(double x0, const Boundary& barrier,
                            double tail_tol = 1e-12, double cap = 0.05);

struct McOptions {
    long n_paths = 100000;
    int n_steps = 1000;
    std::uint64_t seed = 12345;
    int chunk_size = 4096;
    int threads = 0;                 // 0: hardware concurrency
};

/// Euler-Maruyama with Brownian-bridge crossing correction. Paths die on
/// an endpoint strictly below the barrier; between surviving endpoints the
/// weight picks up 1 - exp(-2 d_k d_{k+1} / (sigma^2 dt)). Reproducible:
/// chunk c uses an RNG stream derived from (seed, c), and chunk partial
/// sums are reduced in fixed order.
ForwardResult forward_mc(const DiffusionSpec& spec, const Boundary& barrier,
                         const McOptions& opt);

} // namespace ifp
