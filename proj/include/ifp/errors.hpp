#pragma once

#include <stdexcept>
#include <string>

namespace ifp {

// Error taxonomy shared by all solver modules. Codes map 1:1 onto the
// failure modes of the public operations; the CLI translates them into
// process exit codes (validation vs. solver failure).
enum class Errc {
    p0_violation,
    empty_window,
    quadrature_failure,
    degenerate_slope,
    stencil_overrun,
    out_of_domain,
    cfl_violation,
    nonpositive_density,
    invalid_paths,
    nonfinite_path,
    truncation_too_tight,
    newton_divergence,
    bounds_violation,
    schedule_exhausted,
    positivity_loss,
    level_not_reached,
    gradient_collapse,
    empty_neighborhood,
    degenerate_regression,
    missing_artifact,
    invalid_argument,
    config_error,
};

const char* errc_name(Errc c);

class SolverError : public std::runtime_error {
public:
    SolverError(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

    // true for errors caused by bad inputs rather than solver breakdown
    bool is_validation() const noexcept {
        switch (code_) {
        case Errc::p0_violation:
        case Errc::empty_window:
        case Errc::out_of_domain:
        case Errc::invalid_paths:
        case Errc::invalid_argument:
        case Errc::missing_artifact:
        case Errc::config_error:
            return true;
        default:
            return false;
        }
    }

private:
    Errc code_;
};

} // namespace ifp
