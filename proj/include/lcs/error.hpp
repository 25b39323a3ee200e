#pragma once

#include <stdexcept>
#include <string>

namespace lcs {

/// Process exit codes used by the command-line front end.
enum class ExitCode : int {
    success = 0,
    config = 2,
    numerical = 3,
    io = 4,
};

class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
    virtual ExitCode exit_code() const noexcept { return ExitCode::numerical; }
};

class ConfigError : public Error {
  public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::config; }
};

class IoError : public Error {
  public:
    using Error::Error;
    ExitCode exit_code() const noexcept override { return ExitCode::io; }
};

/// Malformed or inconsistent file contents.
class FormatError : public IoError {
  public:
    using IoError::IoError;
};

class NumericalError : public Error {
  public:
    using Error::Error;
};

/// Query outside the declared space-time domain of a field.
class DomainError : public NumericalError {
  public:
    using NumericalError::NumericalError;
};

} // namespace lcs
