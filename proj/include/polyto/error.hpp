#pragma once

#include <stdexcept>
#include <string>

namespace polyto {

/// Invalid user input: bad config values, mismatched sizes, unknown names.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear solve failed (singular system or residual above tolerance).
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double residual = -1.0)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// Caller broke a precondition (missing cache, NaN gradient, ...).
class ContractError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace polyto
