#pragma once

#include <stdexcept>
#include <string>

namespace fimsindy {

/// Bad input shape, range or configuration.
struct ArgumentError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Normal equations could not be factored (rank-deficient design, no ridge).
struct SingularSystemError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A non-finite state showed up during integration.
struct IntegrationDiverged : std::runtime_error {
    double last_valid_time;
    IntegrationDiverged(const std::string& what, double t)
        : std::runtime_error(what), last_valid_time(t) {}
};

/// No oscillation could be located in a trajectory.
struct DetectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace fimsindy
