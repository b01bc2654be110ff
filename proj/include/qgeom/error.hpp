#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace qgeom {

/// Malformed input: bad files, bad configs, violated preconditions.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The input was well formed but the computation cannot proceed
/// (degenerate level, step too large, grid too coarse, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  ParseError(const std::string& message, std::size_t offset)
      : InputError(message + " (at byte " + std::to_string(offset) + ")"),
        detail_(message),
        offset_(offset) {}

  std::size_t offset() const noexcept { return offset_; }
  /// The message without the offset suffix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  std::string detail_;
  std::size_t offset_;
};

/// Domain error while evaluating an expression (log of a non-positive
/// number, division by zero, ...). Never silently turned into NaN.
class EvaluationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace qgeom
