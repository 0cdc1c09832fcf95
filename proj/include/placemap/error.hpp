#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace placemap {

enum class ErrorKind {
  Io,               // missing or unreadable file
  Format,           // bad magic, version, truncation, malformed manifest
  Shape,            // dimension or length mismatch
  Data,             // non-finite or otherwise invalid values
  Degenerate,       // zero vector, rank-0 place
  Parameter,        // out-of-range argument
  Rank,             // insufficient rank for the requested operation
  Config,           // invalid configuration
  Capability,       // optional data (R factor, headings, sources) missing
  Domain,           // mathematical domain violation
  UndefinedHeading, // orientation has no positive evidence
  EmptyMap,
  Evaluation,       // unresolvable ground truth
};

// Error classes surfaced as process exit codes by the CLI.
enum class ErrorClass { Input = 2, Format = 3, Config = 4, Numeric = 5, Evaluation = 6 };

std::string_view to_string(ErrorKind kind) noexcept;
ErrorClass error_class(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(error_class(kind_)); }

 private:
  ErrorKind kind_;
};

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace placemap
