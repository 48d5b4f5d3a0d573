#pragma once

#include <stdexcept>
#include <string>

namespace trilabel {

enum class ErrorCode {
  InvalidInput,
  ParseError,
  ShapeMismatch,
  AssignmentMissing,
  SelfEdge,
  UnsupportedStructure,
  NotTriangulated,
  UnsupportedClique,
  InsufficientIndependence,
  DegenerateTriplet,
  NoUsableTriplet,
  SignTie,
  AnchorUnreachable,
  PriorNearZero,
  TooFewAbstainRows,
  UnsupportedCliqueSize,
  NumericalInstability,
  ZeroSeparator,
  AllZeroLikelihood,
  DegenerateClass,
  TooLarge,
};

const char* to_string(ErrorCode code);

// Errors that come from the numbers rather than from malformed input.
bool is_numerical(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace trilabel
