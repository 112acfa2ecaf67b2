#pragma once

#include <stdexcept>

namespace twistres {

// Bad user input: geometry, profile parameters, config files, weight windows.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Domain or grid construction failure (empty interior, degenerate polygon).
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative method did not reach its tolerance.
struct ConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inputs outside the certified regime (delta too large, decay check failed).
struct CertificationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace twistres
