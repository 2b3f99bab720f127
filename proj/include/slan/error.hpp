#pragma once

#include <stdexcept>
#include <string>

namespace slan {

/// Failure categories shared by the C++ core and the C API status codes.
enum class ErrorKind {
  invalid_argument = 1,
  not_found = 2,
  io = 3,
  parse = 4,
  numeric = 5,
  state = 6,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

}  // namespace slan
