#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace psrlab {

// Structural problems with inputs (bad row sums, out-of-range indices, ...).
struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Planner failed to reach the requested Bellman residual within max_iters.
struct ConvergenceError : std::runtime_error {
    double last_residual;
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), last_residual(residual) {}
};

// Policy evaluation hit a singular or otherwise degenerate chain.
struct EvaluationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Family generation could not satisfy its structural requirements.
struct GenerationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Every family member assigns probability zero to the observed data.
struct InconsistentEvidenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Estimator asked to run on data it cannot use (e.g. empty dataset).
struct EstimationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Action gap requested on a single-action MDP.
struct UndefinedGapError : std::domain_error {
    using std::domain_error::domain_error;
};

// Loss minimization diverged; carries the iteration where it happened.
struct OptimizationError : std::runtime_error {
    std::size_t iteration;
    OptimizationError(const std::string& what, std::size_t iter)
        : std::runtime_error(what), iteration(iter) {}
};

// Config-file problems; message carries the offending field path.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input was generated under a model the exact path does not cover
// (finite-lambda expert datasets fed to the exact posterior).
struct ModelMismatchError : ValidationError {
    using ValidationError::ValidationError;
};

}  // namespace psrlab
