#pragma once

#include <stdexcept>
#include <string>

namespace scd {

// Bad user input: configuration files, flags, scenario setup.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed trace or thresholds file; message carries file/line context.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Calibration cannot produce valid thresholds from the given corpus.
struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A should-never-happen condition inside the engine.
struct InternalError : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace scd
