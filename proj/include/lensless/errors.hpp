#pragma once

#include <stdexcept>
#include <string>

namespace lensless {

// One exception type with a kind tag; the CLI maps kinds onto exit codes
// (config errors -> 2, data errors -> 3).
enum class ErrorKind {
  Format,      // malformed file contents (bad magic, corrupt payload)
  Truncation,  // file shorter than its header declares
  Domain,      // value outside its documented range
  Capacity,    // request exceeds what the inputs or limits allow
  Shape,       // dimension mismatch
  Io,          // filesystem failure
  Version,     // unsupported format version
  Config,      // invalid or unknown configuration
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& msg) {
  throw Error(kind, msg);
}

inline bool is_config_error(const Error& e) {
  return e.kind() == ErrorKind::Config;
}

}  // namespace lensless
