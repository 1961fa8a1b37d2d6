#pragma once

#include <stdexcept>
#include <string>

namespace wolfflab {

enum class ErrorCode {
  DimensionError,
  ExponentError,
  ModeMismatch,
  NegativeRadius,
  NegativeScale,
  SignError,
  NonpositiveR,
  ZeroMeasure,
  NonRadialMeasure,
  DivergentTail,
  NonMonotoneProfile,
  InfiniteEnergy,
  SubsolutionSearchFailed,
  NotConverged,
  MonotonicityViolated,
  UnboundedCondition,
  ConfigError,
  InvalidArgument,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace wolfflab
