#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace percolab {

enum class ErrorKind {
  validation,     // bad input values, rejected before any computation
  undefined,      // quantity undefined for this input (e.g. no occupied sites)
  divergence,     // closed form diverges (p >= p_c)
  degenerate_fit, // fitter cannot produce an estimate
  no_crossing,    // threshold curve never crosses 1/2
  io,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::validation: return "validation";
    case ErrorKind::undefined: return "undefined";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::degenerate_fit: return "degenerate_fit";
    case ErrorKind::no_crossing: return "no_crossing";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

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

inline void require(bool condition, const std::string& message) {
  if (!condition) fail(ErrorKind::validation, message);
}

}  // namespace percolab
