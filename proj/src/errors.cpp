#include "ifp/errors.hpp"

namespace ifp {

const char* errc_name(Errc c) {
    switch (c) {
    case Errc::p0_violation: return "P0Violation";
    case Errc::empty_window: return "EmptyWindow";
    case Errc::quadrature_failure: return "QuadratureFailure";
    case Errc::degenerate_slope: return "DegenerateSlope";
    case Errc::stencil_overrun: return "StencilOverrun";
    case Errc::out_of_domain: return "OutOfDomain";
    case Errc::cfl_violation: return "CFLViolation";
    case Errc::nonpositive_density: return "NonpositiveDensity";
    case Errc::invalid_paths: return "InvalidPaths";
    case Errc::nonfinite_path: return "NonfinitePath";
    case Errc::truncation_too_tight: return "TruncationTooTight";
    case Errc::newton_divergence: return "NewtonDivergence";
    case Errc::bounds_violation: return "BoundsViolation";
    case Errc::schedule_exhausted: return "ScheduleExhausted";
    case Errc::positivity_loss: return "PositivityLoss";
    case Errc::level_not_reached: return "LevelNotReached";
    case Errc::gradient_collapse: return "GradientCollapse";
    case Errc::empty_neighborhood: return "EmptyNeighborhood";
    case Errc::degenerate_regression: return "DegenerateRegression";
    case Errc::missing_artifact: return "MissingArtifact";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::config_error: return "ConfigError";
    }
    return "UnknownError";
}

} // namespace ifp
