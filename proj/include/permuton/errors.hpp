#pragma once

#include <stdexcept>
#include <string>

namespace permuton {

enum class ErrorKind {
  InvalidInput,
  Degenerate,
  NotConverged,
  NonPositiveDenominator,
  NotSimple,
  RZero,
  StepBlowup,
  AmbiguousBranch,
  PoleOnRectangle,
  OutOfRectangle,
  Infeasible,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries one of the kinds above so the
// CLI can map it onto an exit code without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Continuation gave up; last_good_r is the largest |r| reached with a
// converged solution.
class StepBlowupError : public Error {
 public:
  StepBlowupError(double last_good_r, const std::string& what)
      : Error(ErrorKind::StepBlowup, what), last_good_r_(last_good_r) {}

  double last_good_r() const noexcept { return last_good_r_; }

 private:
  double last_good_r_;
};

}  // namespace permuton
