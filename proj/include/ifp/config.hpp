#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ifp/errors.hpp"

namespace ifp {

/// Flat INI-style run configuration. Unknown keys are rejected; every key
/// has a default so a minimal file stays short. `auto` markers resolve
/// during the run and the manifest echoes the resolved values.
struct RunConfig {
    // [process]
    std::string process_kind = "brownian"; // brownian | ou | tabulated
    double mu = 0.0;
    double sigma = 1.4142135623730951;
    double ou_rate = 1.0, ou_level = 0.0, ou_sigma = 1.0;
    std::vector<double> tab_x, tab_mu, tab_sigma;
    double x_lo_hint = -8.0, x_hi_hint = 8.0;

    // [density]
    std::string density_kind = "delta"; // delta | xexp | bell | gauss | tabulated
    double density_x0 = 0.0;
    double density_rate = 1.0;
    double density_mean = 2.0, density_sd = 0.4;
    std::vector<double> density_knots, density_values;

    // [grid]
    std::optional<double> grid_x_min, grid_x_max; // nullopt = auto
    int nx = 1800;
    std::optional<double> grid_t0; // nullopt = auto (0, or delta warm start)
    double t_end = 1.0;
    int nt = 1000;

    // [inverse]
    double eps0 = 1e-1, eps_ratio = 4.0, eps_min = 1e-4;
    double newton_tol = 1e-10;
    int max_newton = 50;
    double cont_tol = 1e-3;
    std::optional<double> theta;

    // [forward]
    std::string forward_method = "pde"; // pde | mc | both
    std::string barrier_csv;            // empty = no barrier (-inf)
    bool store_field = false;

    // [mc]
    long n_paths = 100000;
    int n_steps = 1000;
    int chunk = 4096;
    int threads = 0;

    // [hodograph]
    bool hodograph_enabled = true;
    std::optional<double> z_eps;
    int nz = 48;
    std::vector<double> h_values = {4e-2, 2e-2, 1e-2};
    double hod_window_lo = 0.1;
    std::optional<double> hod_window_hi;

    // [diagnostics]
    double diag_window_lo = 0.1;
    double tol_roundtrip = 2e-2;
    double tol_fb_median = 5e-2;
    double tol_holder = 0.45;
    bool run_mc = true;

    // [io]
    std::string survival_csv;

    // [output]
    std::string output_dir = "out";

    // [run]
    std::uint64_t seed = 12345;

    std::filesystem::path base_dir; // directory of the config file

    static RunConfig parse_file(const std::filesystem::path& path,
                                const std::vector<std::string>& overrides = {});
    static RunConfig parse_text(const std::string& text,
                                const std::vector<std::string>& overrides = {},
                                const std::filesystem::path& base = ".");

    /// Deterministic echo of every key with its resolved value.
    std::string canonical() const;
    std::string hash() const; // FNV-1a of canonical(), hex
};

} // namespace ifp
