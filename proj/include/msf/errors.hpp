#pragma once

#include <stdexcept>
#include <string>

namespace msf {

// Error taxonomy shared across modules; the CLI maps these to process exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DegenerateObservationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Requested window truncates non-negligible probability mass.
struct WindowError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Internal cross-check failed (e.g. entropy ordering violated beyond tolerance).
struct ConsistencyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace msf
