#pragma once

#include <stdexcept>
#include <string>

namespace opctl {

/// Bad input data: malformed model files, dimension mismatches, values out of
/// range. Maps to process exit code 3.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numerical failure: singular linear maps, indefinite Lyapunov weights,
/// infeasible threshold problems. Maps to process exit code 4.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// The synthesis chain proved the model cannot be stabilized under its
/// constraints. Carries the first failing stage. Maps to process exit code 2.
struct NotStabilizableError : std::runtime_error {
    std::string stage;
    NotStabilizableError(std::string stage_, const std::string& msg)
        : std::runtime_error(msg), stage(std::move(stage_)) {}
};

} // namespace opctl
