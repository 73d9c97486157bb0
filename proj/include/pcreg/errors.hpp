#pragma once

#include <stdexcept>
#include <string>

namespace pcreg {

/// Bad argument values (empty clouds, out-of-range indices, ...).
struct InvalidInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operation called on an object whose state does not allow it.
struct InvalidState : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed file contents; carries the 1-based line number.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, int line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_number(line) {}
  int line_number;
};

/// Input geometry does not determine a unique solution.
struct DegenerateInput : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// All candidate correspondences were rejected.
struct NoCorrespondences : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Non-finite values encountered during numeric evaluation.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Bad run configuration (unknown keys, invalid values).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Filesystem-level failures (missing files, unwritable paths).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pcreg
