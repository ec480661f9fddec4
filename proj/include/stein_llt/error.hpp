#pragma once

#include <stdexcept>
#include <string>

namespace stein_llt {

enum class ErrorKind {
  Domain,
  Unsupported,
  Precision,
  Incomplete,
  Refused,
  Io,
};

// Every failure raised by the library carries a kind so the C layer can map
// it onto a stable status code.
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

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) fail(kind, what);
}

}  // namespace stein_llt
