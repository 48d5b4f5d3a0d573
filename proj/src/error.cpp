#include "trilabel/error.hpp"

namespace trilabel {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::AssignmentMissing: return "AssignmentMissing";
    case ErrorCode::SelfEdge: return "SelfEdge";
    case ErrorCode::UnsupportedStructure: return "UnsupportedStructure";
    case ErrorCode::NotTriangulated: return "NotTriangulated";
    case ErrorCode::UnsupportedClique: return "UnsupportedClique";
    case ErrorCode::InsufficientIndependence: return "InsufficientIndependence";
    case ErrorCode::DegenerateTriplet: return "DegenerateTriplet";
    case ErrorCode::NoUsableTriplet: return "NoUsableTriplet";
    case ErrorCode::SignTie: return "SignTie";
    case ErrorCode::AnchorUnreachable: return "AnchorUnreachable";
    case ErrorCode::PriorNearZero: return "PriorNearZero";
    case ErrorCode::TooFewAbstainRows: return "TooFewAbstainRows";
    case ErrorCode::UnsupportedCliqueSize: return "UnsupportedCliqueSize";
    case ErrorCode::NumericalInstability: return "NumericalInstability";
    case ErrorCode::ZeroSeparator: return "ZeroSeparator";
    case ErrorCode::AllZeroLikelihood: return "AllZeroLikelihood";
    case ErrorCode::DegenerateClass: return "DegenerateClass";
    case ErrorCode::TooLarge: return "TooLarge";
  }
  return "Unknown";
}

bool is_numerical(ErrorCode code) {
  switch (code) {
    case ErrorCode::InsufficientIndependence:
    case ErrorCode::DegenerateTriplet:
    case ErrorCode::NoUsableTriplet:
    case ErrorCode::SignTie:
    case ErrorCode::AnchorUnreachable:
    case ErrorCode::PriorNearZero:
    case ErrorCode::TooFewAbstainRows:
    case ErrorCode::NumericalInstability:
    case ErrorCode::ZeroSeparator:
    case ErrorCode::AllZeroLikelihood:
    case ErrorCode::DegenerateClass:
      return true;
    default:
      return false;
  }
}

}  // namespace trilabel
