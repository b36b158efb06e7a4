#pragma once

#include <stdexcept>
#include <string>

namespace pwerpi {

// Process exit codes used by the command-line front end.
enum class ExitCode : int {
  success = 0,
  config_error = 2,
  numerical_failure = 3,
  infeasible_design = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode exit_code() const noexcept { return ExitCode::numerical_failure; }
  virtual const char* kind() const noexcept { return "error"; }
};

class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config_error; }
  const char* kind() const noexcept override { return "config_error"; }
};

class DomainError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config_error; }
  const char* kind() const noexcept override { return "domain_error"; }
};

class InconsistencyError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::config_error; }
  const char* kind() const noexcept override { return "inconsistency_error"; }
};

// A population arm (or a cell that needs a variance estimate) has too few patients.
class InsufficientSampleError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::infeasible_design; }
  const char* kind() const noexcept override { return "insufficient_sample"; }
};

// The design needs the resampling engine (unknown heterogeneous variances).
class BootstrapRequiredError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::infeasible_design; }
  const char* kind() const noexcept override { return "bootstrap_required"; }
};

class InfeasibleLevelError : public Error {
 public:
  using Error::Error;
  ExitCode exit_code() const noexcept override { return ExitCode::infeasible_design; }
  const char* kind() const noexcept override { return "infeasible_level"; }
};

class NumericalError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "numerical_error"; }
};

}  // namespace pwerpi
