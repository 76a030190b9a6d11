#pragma once

#include <stdexcept>
#include <string>

namespace densflow {

// Error categories; the C API maps each onto a densflow_status code.
enum class ErrorKind {
  Domain,        // evaluation outside a model's or curve's valid range
  Configuration, // malformed or out-of-band run configuration
  Io,            // filesystem problems
  Estimation,    // a post-processing fit could not be formed
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline Error domain_error(const std::string& what) { return {ErrorKind::Domain, what}; }
inline Error config_error(const std::string& what) { return {ErrorKind::Configuration, what}; }
inline Error io_error(const std::string& what) { return {ErrorKind::Io, what}; }
inline Error estimation_error(const std::string& what) { return {ErrorKind::Estimation, what}; }

}  // namespace densflow
