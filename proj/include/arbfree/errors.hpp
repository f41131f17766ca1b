#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace arbfree {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration: bad architecture, negative learning rate, unknown config key.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Invalid caller input: non-finite coordinates, empty batches, malformed CSV rows.
class InputError : public Error {
 public:
  using Error::Error;
};

/// Parameters outside a model's mathematical domain (e.g. |rho| >= 1).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate result during evaluation.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Shape mismatch between objects that must agree (tapes, adjoints, optimizer state).
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

/// File-system failures.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class TrainingError : public Error {
 public:
  TrainingError(const std::string& what, std::size_t epoch, double e_mse, double e_penalty)
      : Error(what), epoch(epoch), e_mse(e_mse), e_penalty(e_penalty) {}

  std::size_t epoch;
  double e_mse;
  double e_penalty;
};

}  // namespace arbfree
