#pragma once

#include <stdexcept>
#include <string>

namespace mckelm {

enum class ErrorKind {
  parse,      // malformed text input
  format,     // malformed binary input (magic, version, truncation)
  empty,      // empty dataset / empty class
  shape,      // dimension mismatch
  range,      // index or count out of range
  domain,     // value outside a function's domain
  validation, // bad configuration parameter
  partition,  // split impossible, insufficient data
  numerical,  // factorization failure, non-finite values
  io          // file missing, unreadable or unwritable
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::format: return "format error";
    case ErrorKind::empty: return "empty error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::range: return "range error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::validation: return "validation error";
    case ErrorKind::partition: return "partition error";
    case ErrorKind::numerical: return "numerical error";
    case ErrorKind::io: return "I/O error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit code for an error: 1 domain/validation, 2 I/O, 3 numerical.
inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::io: return 2;
    case ErrorKind::numerical: return 3;
    default: return 1;
  }
}

}  // namespace mckelm
