#include "placemap/error.hpp"

namespace placemap {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io: return "input error";
    case ErrorKind::Format: return "format error";
    case ErrorKind::Shape: return "shape error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Degenerate: return "degenerate-input error";
    case ErrorKind::Parameter: return "parameter error";
    case ErrorKind::Rank: return "rank error";
    case ErrorKind::Config: return "config error";
    case ErrorKind::Capability: return "capability error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::UndefinedHeading: return "undefined-heading error";
    case ErrorKind::EmptyMap: return "empty-map error";
    case ErrorKind::Evaluation: return "evaluation error";
  }
  return "error";
}

ErrorClass error_class(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Io:
      return ErrorClass::Input;
    case ErrorKind::Format:
    case ErrorKind::Shape:
      return ErrorClass::Format;
    case ErrorKind::Parameter:
    case ErrorKind::Config:
    case ErrorKind::Capability:
      return ErrorClass::Config;
    case ErrorKind::Data:
    case ErrorKind::Degenerate:
    case ErrorKind::Rank:
    case ErrorKind::Domain:
    case ErrorKind::UndefinedHeading:
      return ErrorClass::Numeric;
    case ErrorKind::EmptyMap:
    case ErrorKind::Evaluation:
      return ErrorClass::Evaluation;
  }
  return ErrorClass::Numeric;
}

void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, std::string(to_string(kind)) + ": " + message);
}

}  // namespace placemap
