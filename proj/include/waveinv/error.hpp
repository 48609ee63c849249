#pragma once

#include <stdexcept>
#include <string>

namespace waveinv {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (divergence, stagnation, blow-up, ...).
/// `stage` names the pipeline stage that failed so batch drivers can report it.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what, std::string stage = {})
      : Error(stage.empty() ? what : stage + ": " + what), stage_(std::move(stage)) {}

  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Malformed or unresolvable experiment configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace waveinv
