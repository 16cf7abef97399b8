// Copyright 2026 The pclft Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pclft {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite or otherwise out-of-domain numeric input.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A precondition of an operation was violated by the caller.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Backward requested on a tape that has already been replayed.
class TapeReuseError : public ContractError {
 public:
  using ContractError::ContractError;
};

/// Invalid hyperparameters or run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Index outside a lookup table.
class IndexError : public Error {
 public:
  using Error::Error;
};

/// Malformed input file. Carries the 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace pclft
