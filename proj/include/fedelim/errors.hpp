#pragma once

#include <stdexcept>
#include <string>

namespace fedelim {

// Bad experiment configuration or parameter values (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The optimum oracle could not certify a maximum within its budget.
class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A message or state transition violated the federated protocol.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fedelim
