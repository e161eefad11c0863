#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sslaw {

// Failure classes. The CLI maps kValidation to exit 2 and the rest to exit 3.
enum class ErrorKind {
  kValidation,  // malformed input, unmet precondition, bad flag
  kDomain,      // a law cannot be evaluated at the requested point
  kNumerical,   // fitting or estimation failed
  kIo,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace sslaw
