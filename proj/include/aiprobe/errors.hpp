#pragma once

#include <stdexcept>
#include <string>

namespace aiprobe {

// Raised for malformed input files (XML syntax, schema violations, bad
// expressions). Carries the 1-based source line when one is known.
class ParseError : public std::runtime_error {
  public:
    ParseError(std::string message, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + message : message), line_(line) {}

    int line() const { return line_; }

  private:
    int line_ = 0;
};

// Raised when a value violates a resolved constraint, an assignment is
// incomplete, or bounds are inconsistent after resolution.
class ConstraintError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

// Raised for misuse of the simulation/search API (unknown action symbols,
// schema mismatches, invalid task state).
class SimError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

} // namespace aiprobe
