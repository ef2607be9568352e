#pragma once

#include <stdexcept>
#include <string>

namespace jitgp {

/// Failure category. Maps onto the CLI exit codes (usage/config = 1,
/// data = 2, internal = 3).
enum class ErrorKind {
  parse,
  schema,
  value,
  domain,
  config,
  consistency,
  data,
  shape,
  internal,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::schema: return "schema error";
    case ErrorKind::value: return "value error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::config: return "configuration error";
    case ErrorKind::consistency: return "consistency error";
    case ErrorKind::data: return "data error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::internal: return "internal error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  int exit_code() const noexcept {
    switch (kind_) {
      case ErrorKind::config: return 1;
      case ErrorKind::internal: return 3;
      default: return 2;
    }
  }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace jitgp
