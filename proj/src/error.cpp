#include "uryforge/error.hpp"

namespace uryforge {

const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::EmptyBase: return "EmptyBase";
    case ErrorKind::BaseMismatch: return "BaseMismatch";
    case ErrorKind::KatetovViolation: return "KatetovViolation";
    case ErrorKind::CapExceeded: return "CapExceeded";
    case ErrorKind::UnknownPoint: return "UnknownPoint";
    case ErrorKind::InconsistentType: return "InconsistentType";
    case ErrorKind::TypeMismatch: return "TypeMismatch";
    case ErrorKind::PreconditionFailed: return "PreconditionFailed";
    case ErrorKind::NotAnExtension: return "NotAnExtension";
    case ErrorKind::ConstraintViolation: return "ConstraintViolation";
    case ErrorKind::ParityObstruction: return "ParityObstruction";
    case ErrorKind::HypothesisFailed: return "HypothesisFailed";
    case ErrorKind::BudgetExceeded: return "BudgetExceeded";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::Internal: return "Internal";
  }
  return "Error";
}

}  // namespace uryforge
