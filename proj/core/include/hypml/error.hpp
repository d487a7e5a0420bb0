#pragma once

#include <stdexcept>
#include <string>

namespace hypml {

/// Broad failure classes. The CLI maps these onto process exit codes.
enum class ErrorKind {
  Config,     // invalid configuration or arguments
  Data,       // malformed or inconsistent input data
  Domain,     // value outside the domain of a geometric operation
  Numerical,  // non-finite values produced during computation
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

const char* to_string(ErrorKind kind) noexcept;

}  // namespace hypml
