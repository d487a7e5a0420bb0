#include "hypml/error.hpp"

namespace hypml {

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "config error";
    case ErrorKind::Data: return "data error";
    case ErrorKind::Domain: return "domain error";
    case ErrorKind::Numerical: return "numerical error";
  }
  return "error";
}

}  // namespace hypml
