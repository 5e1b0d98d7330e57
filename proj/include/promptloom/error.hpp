#pragma once

#include <stdexcept>
#include <string>

namespace promptloom {

// Failure categories surfaced through the C API as status codes and by the
// CLI as one-line machine-parsable errors.
enum class ErrorKind {
  Io,
  Parse,
  Invalid,
  Network,
  Internal,
};

inline const char* error_kind_name(ErrorKind k) {
  switch (k) {
    case ErrorKind::Io: return "io";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::Invalid: return "invalid";
    case ErrorKind::Network: return "network";
    case ErrorKind::Internal: return "internal";
  }
  return "internal";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace promptloom
