#pragma once

#include <stdexcept>
#include <string>

namespace wm {

/// Bad user-facing configuration: unknown preset, invalid flag value,
/// inconsistent dimensions requested by the caller.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// File system and file format failures.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Mismatched tensor/image shapes between operands.
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Numeric failure: non-finite values, singular matrices, diverged training.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace wm
