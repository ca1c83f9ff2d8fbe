#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ifp/config.hpp"
#include "ifp/diagnostics.hpp"
#include "ifp/hodograph.hpp"

namespace ifp {

/// Process exit codes used by the CLI.
enum ExitCode : int {
    exit_ok = 0,
    exit_validation = 2,
    exit_solver = 3,
    exit_diagnostic = 4,
};

DiffusionSpec build_spec(const RunConfig& cfg);

/// Resolves the `auto` grid entries: truncation bounds from the reduced
/// density support and Gaussian tail targets (ceiling 1e-10, left-edge
/// 1e-8-compatible), t0 from the delta warm start. Mutates cfg so the
/// manifest echoes resolved numbers.
SpaceTimeGrid build_grid(RunConfig& cfg, const ReducedSpec& reduced,
                         const Boundary* reduced_barrier);

/// Hodograph stage on a converged inverse solution: scaling field, level
/// sets, quasilinear solve, perturbed family (run concurrently) and the
/// bracketing report per h.
struct HodographStage {
    double z_eps = 0.0;
    HodographField X, Y;
    BandConstants band;
    std::vector<double> h_values;
    std::vector<HodographField> y_up, y_down;
    std::vector<BracketReport> brackets;
    std::vector<double> b_window, x_edge;
    double sup_y_minus_x = 0.0;
    double sup_y0_minus_b = 0.0;
    MetricSeries sign_change_series;
    bool sign_changes_nonincreasing = true;
};

HodographStage run_hodograph_stage(const InverseSolution& sol, const SurvivalCurve& curve,
                                   const ReducedSpec& reduced, const SpaceTimeGrid& grid,
                                   const RunConfig& cfg);

/// Executes one CLI command: forward | inverse | hodograph | diagnose |
/// verify. Writes artifacts and manifest.json into the output directory
/// (config value, overridden by IFP_OUTPUT_DIR). Returns the exit code;
/// human-readable failure text goes to `err`.
int run_command(const std::string& command, const std::string& config_path,
                const std::vector<std::string>& overrides, std::ostream& err);

/// Same entry point with an already-parsed config (used by tests).
int run_command_cfg(const std::string& command, RunConfig cfg, std::ostream& err);

/// Long-format plot bundle from the named artifacts of a finished run.
/// Throws MissingArtifact when a listed file is absent.
void emit_plotdata(const std::filesystem::path& dir,
                   const std::vector<std::string>& artifacts,
                   const std::filesystem::path& out_name = "plotdata.csv");

} // namespace ifp
