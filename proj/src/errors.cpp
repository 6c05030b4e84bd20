#include "permuton/errors.hpp"

namespace permuton {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::Degenerate: return "Degenerate";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::NonPositiveDenominator: return "NonPositiveDenominator";
    case ErrorKind::NotSimple: return "NotSimple";
    case ErrorKind::RZero: return "RZero";
    case ErrorKind::StepBlowup: return "StepBlowup";
    case ErrorKind::AmbiguousBranch: return "AmbiguousBranch";
    case ErrorKind::PoleOnRectangle: return "PoleOnRectangle";
    case ErrorKind::OutOfRectangle: return "OutOfRectangle";
    case ErrorKind::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

}  // namespace permuton
