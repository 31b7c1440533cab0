#pragma once

#include <stdexcept>
#include <string>

namespace uryforge {

enum class ErrorKind {
  EmptyBase,
  BaseMismatch,
  KatetovViolation,
  CapExceeded,
  UnknownPoint,
  InconsistentType,
  TypeMismatch,
  PreconditionFailed,
  NotAnExtension,
  ConstraintViolation,
  ParityObstruction,
  HypothesisFailed,
  BudgetExceeded,
  ConfigError,
  Internal,
};

const char* to_string(ErrorKind k);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace uryforge
