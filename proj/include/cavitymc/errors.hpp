#pragma once
#include <stdexcept>
#include <string>

namespace cavitymc {

// Model pushed outside its validity window (atomic saturation too high, ...).
struct ModelValidityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad user input: malformed config file, unknown key, out-of-range value.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical tolerance not met (steady-state residual, fit did not converge).
struct ToleranceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Noise calibration could not bracket or converge to the target lifetime.
struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Peak extraction failed (merged peaks, no local maxima, singular fit).
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace cavitymc
